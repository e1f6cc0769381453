#include "gatenet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "gatenet/error.hpp"
#include "gatenet/ops.hpp"

namespace gatenet {

namespace {

std::vector<std::string_view> split_view(std::string_view text, char delim) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(delim, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

void require_columns(const RawRow& row, const FieldSchema& schema) {
  if (row.columns.size() != schema.size() + 1) {
    throw DataError("line " + std::to_string(row.line) + ": expected " +
                    std::to_string(schema.size() + 1) +
                    " columns (label + fields), got " +
                    std::to_string(row.columns.size()));
  }
}

}  // namespace

FieldSchema::FieldSchema(std::vector<FieldSpec> fields) : fields_(std::move(fields)) {
  if (fields_.empty()) throw ConfigError("schema must declare at least one field");
  std::set<std::string> seen;
  for (const auto& f : fields_) {
    if (f.name.empty()) throw ConfigError("schema field names must be nonempty");
    if (!seen.insert(f.name).second) {
      throw ConfigError("duplicate schema field name '" + f.name + "'");
    }
  }
}

FieldSchema FieldSchema::parse(std::string_view declaration) {
  std::vector<FieldSpec> fields;
  for (auto part : split_view(declaration, ',')) {
    part = trim(part);
    if (part.empty()) continue;
    FieldSpec spec;
    const auto colon = part.find(':');
    spec.name = std::string(trim(part.substr(0, colon)));
    if (colon != std::string_view::npos) {
      const auto kind = trim(part.substr(colon + 1));
      if (kind == "cat") {
        spec.kind = FieldKind::kCategorical;
      } else if (kind == "cont") {
        spec.kind = FieldKind::kContinuous;
      } else {
        throw ConfigError("field '" + spec.name + "' has unknown kind '" +
                          std::string(kind) + "' (valid: cat, cont)");
      }
    }
    fields.push_back(std::move(spec));
  }
  return FieldSchema(std::move(fields));
}

FieldSchema FieldSchema::categorical(std::size_t f) {
  std::vector<FieldSpec> fields;
  for (std::size_t i = 1; i <= f; ++i) fields.push_back({"c" + std::to_string(i)});
  return FieldSchema(std::move(fields));
}

std::string FieldSchema::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (i) out += ',';
    out += fields_[i].name;
    out += fields_[i].kind == FieldKind::kContinuous ? ":cont" : ":cat";
  }
  return out;
}

std::vector<RawRow> read_delimited(std::istream& in, char delimiter) {
  std::vector<RawRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    RawRow row;
    row.line = line_no;
    for (auto part : split_view(line, delimiter)) row.columns.emplace_back(trim(part));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RawRow> read_delimited_file(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  return read_delimited(in, delimiter);
}

Vocabulary::Vocabulary(std::size_t num_fields)
    : maps_(num_fields), tokens_(num_fields) {}

std::vector<std::size_t> Vocabulary::cardinalities() const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < num_fields(); ++f) out.push_back(cardinality(f));
  return out;
}

std::uint32_t Vocabulary::lookup(std::size_t field, std::string_view token) const {
  const auto& map = maps_.at(field);
  auto it = map.find(std::string(token));
  return it == map.end() ? 0 : it->second;
}

std::uint32_t Vocabulary::add(std::size_t field, std::string token) {
  auto& map = maps_.at(field);
  auto [it, inserted] =
      map.emplace(token, static_cast<std::uint32_t>(tokens_[field].size() + 1));
  if (inserted) tokens_[field].push_back(std::move(token));
  return it->second;
}

const std::string& Vocabulary::token(std::size_t field, std::uint32_t index) const {
  return tokens_.at(field).at(index - 1);
}

void Vocabulary::save(std::ostream& out, const FieldSchema& schema) const {
  if (schema.size() != num_fields()) {
    throw DataError("vocabulary has " + std::to_string(num_fields()) +
                    " fields, schema has " + std::to_string(schema.size()));
  }
  for (std::size_t f = 0; f < num_fields(); ++f) {
    for (std::size_t i = 0; i < tokens_[f].size(); ++i) {
      out << schema[f].name << '\t' << tokens_[f][i] << '\t' << (i + 1) << '\n';
    }
  }
}

void Vocabulary::save_file(const std::string& path, const FieldSchema& schema) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary file '" + path + "'");
  save(out, schema);
}

Vocabulary Vocabulary::load(std::istream& in, const FieldSchema& schema) {
  Vocabulary vocab(schema.size());
  std::unordered_map<std::string, std::size_t> field_pos;
  for (std::size_t f = 0; f < schema.size(); ++f) field_pos[schema[f].name] = f;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto parts = split_view(line, '\t');
    if (parts.size() != 3) {
      throw DataError("vocabulary line " + std::to_string(line_no) +
                      ": expected field<TAB>token<TAB>index");
    }
    auto it = field_pos.find(std::string(parts[0]));
    if (it == field_pos.end()) {
      throw DataError("vocabulary line " + std::to_string(line_no) +
                      ": unknown field '" + std::string(parts[0]) + "'");
    }
    std::uint32_t index = 0;
    auto [ptr, ec] = std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), index);
    if (ec != std::errc() || ptr != parts[2].data() + parts[2].size()) {
      throw DataError("vocabulary line " + std::to_string(line_no) + ": bad index");
    }
    const std::size_t f = it->second;
    if (index != vocab.tokens_[f].size() + 1) {
      throw DataError("vocabulary line " + std::to_string(line_no) +
                      ": indices must be dense and sorted per field");
    }
    vocab.add(f, std::string(parts[1]));
  }
  return vocab;
}

Vocabulary Vocabulary::load_file(const std::string& path, const FieldSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file '" + path + "'");
  return load(in, schema);
}

std::string discretize_continuous(std::string_view value) {
  value = trim(value);
  if (value.empty()) return std::string(kMissingToken);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v)) {
    throw DataError("cannot parse continuous value '" + std::string(value) + "'");
  }
  if (v > 2.0) {
    const double l = std::log(v);
    return "L" + std::to_string(static_cast<long long>(std::floor(l * l)));
  }
  return std::to_string(static_cast<long long>(std::floor(v)));
}

std::string field_token(std::string_view cell, const FieldSpec& field) {
  if (field.kind == FieldKind::kContinuous) return discretize_continuous(cell);
  cell = trim(cell);
  return cell.empty() ? std::string(kMissingToken) : std::string(cell);
}

Vocabulary build_vocab(const std::vector<RawRow>& rows, const FieldSchema& schema,
                       std::size_t min_count) {
  const std::size_t f = schema.size();
  std::vector<std::unordered_map<std::string, std::size_t>> counts(f);
  std::vector<std::vector<std::string>> first_seen(f);
  for (const auto& row : rows) {
    require_columns(row, schema);
    for (std::size_t i = 0; i < f; ++i) {
      std::string token = field_token(row.columns[i + 1], schema[i]);
      if (token == kMissingToken) continue;
      auto [it, inserted] = counts[i].emplace(token, 0);
      if (inserted) first_seen[i].push_back(std::move(token));
      ++it->second;
    }
  }
  Vocabulary vocab(f);
  for (std::size_t i = 0; i < f; ++i) {
    for (auto& token : first_seen[i]) {
      if (counts[i][token] >= min_count) vocab.add(i, std::move(token));
    }
  }
  return vocab;
}

int parse_label(std::string_view text, std::size_t line) {
  text = trim(text);
  if (text == "1") return 1;
  if (text == "0") return 0;
  throw DataError("line " + std::to_string(line) + ": label must be 0 or 1, got '" +
                  std::string(text) + "'");
}

EncodedInstance encode_instance(const RawRow& row, const FieldSchema& schema,
                                const Vocabulary& vocab) {
  require_columns(row, schema);
  EncodedInstance inst;
  inst.label = parse_label(row.columns[0], row.line);
  inst.indices.reserve(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    inst.indices.push_back(vocab.lookup(i, field_token(row.columns[i + 1], schema[i])));
  }
  return inst;
}

void Dataset::push_back(const EncodedInstance& inst) {
  if (inst.indices.size() != num_fields_) {
    throw DataError("instance has " + std::to_string(inst.indices.size()) +
                    " indices, dataset expects " + std::to_string(num_fields_));
  }
  push_back(inst.indices.data(), inst.label);
}

void Dataset::push_back(const std::uint32_t* indices, int label) {
  indices_.insert(indices_.end(), indices, indices + num_fields_);
  labels_.push_back(static_cast<std::uint8_t>(label));
}

EncodedInstance Dataset::instance(std::size_t i) const {
  EncodedInstance inst;
  inst.indices.assign(indices(i), indices(i) + num_fields_);
  inst.label = labels_[i];
  return inst;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out(num_fields_);
  out.indices_.reserve(rows.size() * num_fields_);
  out.labels_.reserve(rows.size());
  for (auto r : rows) out.push_back(indices(r), labels_[r]);
  return out;
}

void Dataset::validate(const std::vector<std::size_t>& cardinalities) const {
  if (cardinalities.size() != num_fields_) {
    throw DataError("dataset has " + std::to_string(num_fields_) +
                    " fields, model expects " + std::to_string(cardinalities.size()));
  }
  for (std::size_t r = 0; r < size(); ++r) {
    for (std::size_t f = 0; f < num_fields_; ++f) {
      if (indices(r)[f] >= cardinalities[f]) {
        throw DataError("instance " + std::to_string(r) + " field " +
                        std::to_string(f) + ": index " + std::to_string(indices(r)[f]) +
                        " out of range for cardinality " +
                        std::to_string(cardinalities[f]));
      }
    }
  }
}

Dataset encode_rows(const std::vector<RawRow>& rows, const FieldSchema& schema,
                    const Vocabulary& vocab) {
  Dataset data(schema.size());
  for (const auto& row : rows) data.push_back(encode_instance(row, schema, vocab));
  return data;
}

EncodedBatch make_batch(const Dataset& data, const std::vector<std::size_t>& rows) {
  EncodedBatch batch;
  batch.num_fields = data.num_fields();
  batch.indices.reserve(rows.size() * data.num_fields());
  batch.labels.reserve(rows.size());
  for (auto r : rows) {
    batch.indices.insert(batch.indices.end(), data.indices(r),
                         data.indices(r) + data.num_fields());
    batch.labels.push_back(data.label(r));
  }
  return batch;
}

EncodedBatch make_batch(const Dataset& data) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return make_batch(data, rows);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  // The epsilon keeps exact products such as 10 * 0.7 from rounding down.
  const auto n_train = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * train_fraction + 1e-9));
  return {std::vector<std::size_t>(order.begin(), order.begin() + n_train),
          std::vector<std::size_t>(order.begin() + n_train, order.end())};
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                  std::uint64_t seed) {
  const auto [train_rows, test_rows] = split_indices(data.size(), train_fraction, seed);
  return {data.subset(train_rows), data.subset(test_rows)};
}

std::vector<EncodedBatch> batches(const Dataset& data, std::size_t batch_size,
                                  std::optional<std::uint64_t> shuffle_seed) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle_seed) {
    Rng rng(*shuffle_seed);
    rng.shuffle(order);
  }
  std::vector<EncodedBatch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    out.push_back(make_batch(
        data, std::vector<std::size_t>(order.begin() + start, order.begin() + end)));
  }
  return out;
}

PlantedData synthesize_planted(std::size_t num_fields, std::size_t signal_fields,
                               std::size_t n, std::uint64_t seed,
                               const PlantedOptions& options) {
  if (signal_fields > num_fields) {
    throw ConfigError("signal fields (" + std::to_string(signal_fields) +
                      ") exceed field count (" + std::to_string(num_fields) + ")");
  }
  if (options.cardinality == 0) throw ConfigError("planted cardinality must be positive");
  PlantedData out;
  out.schema = FieldSchema::categorical(num_fields);
  out.cardinalities.assign(num_fields, options.cardinality + 1);
  out.data = Dataset(num_fields);

  // Zipf-distributed token popularity, shared by all fields.
  std::vector<double> cdf(options.cardinality);
  double total = 0.0;
  for (std::size_t r = 0; r < options.cardinality; ++r) {
    total += 1.0 / std::pow(static_cast<double>(r + 1), options.zipf_exponent);
    cdf[r] = total;
  }
  for (auto& c : cdf) c /= total;

  Rng weight_rng = Rng(seed).derive("planted.weights");
  out.token_weights.assign(signal_fields, std::vector<double>(options.cardinality + 1, 0.0));
  for (auto& w : out.token_weights) {
    for (std::size_t t = 1; t < w.size(); ++t) w[t] = options.signal_scale * weight_rng.normal();
  }

  Rng draw_rng = Rng(seed).derive("planted.draws");
  std::vector<std::uint32_t> row(num_fields);
  for (std::size_t i = 0; i < n; ++i) {
    double logit = 0.0;
    for (std::size_t f = 0; f < num_fields; ++f) {
      const double u = draw_rng.uniform();
      auto rank = static_cast<std::size_t>(
          std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      rank = std::min(rank, options.cardinality - 1);
      row[f] = static_cast<std::uint32_t>(rank + 1);
      if (f < signal_fields) logit += out.token_weights[f][row[f]];
    }
    const int label = draw_rng.bernoulli(ops::activate(logit, ops::Activation::kSigmoid));
    out.data.push_back(row.data(), label);
  }
  return out;
}

Vocabulary identity_vocabulary(const std::vector<std::size_t>& cardinalities) {
  Vocabulary vocab(cardinalities.size());
  for (std::size_t f = 0; f < cardinalities.size(); ++f) {
    for (std::size_t i = 1; i < cardinalities[f]; ++i) vocab.add(f, std::to_string(i));
  }
  return vocab;
}

void write_delimited(std::ostream& out, const Dataset& data, const Vocabulary& vocab,
                     char delimiter) {
  for (std::size_t r = 0; r < data.size(); ++r) {
    out << data.label(r);
    for (std::size_t f = 0; f < data.num_fields(); ++f) {
      const auto idx = data.indices(r)[f];
      out << delimiter << (idx == 0 ? std::string() : vocab.token(f, idx));
    }
    out << '\n';
  }
}

}  // namespace gatenet
