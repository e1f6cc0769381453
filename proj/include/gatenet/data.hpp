#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gatenet/rng.hpp"

namespace gatenet {

enum class FieldKind { kCategorical, kContinuous };

struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::kCategorical;

  friend bool operator==(const FieldSpec&, const FieldSpec&) = default;
};

// Ordered categorical/continuous input slots. Names are unique and there is
// at least one field.
class FieldSchema {
 public:
  FieldSchema() = default;
  explicit FieldSchema(std::vector<FieldSpec> fields);

  // "name:cat,name:cont,..." with ":cat" optional.
  static FieldSchema parse(std::string_view declaration);
  // f categorical fields named c1..cf.
  static FieldSchema categorical(std::size_t f);

  std::size_t size() const { return fields_.size(); }
  const FieldSpec& operator[](std::size_t i) const { return fields_[i]; }
  const std::vector<FieldSpec>& fields() const { return fields_; }
  std::string to_string() const;

  friend bool operator==(const FieldSchema&, const FieldSchema&) = default;

 private:
  std::vector<FieldSpec> fields_;
};

// One raw record: label column first, then one column per field.
struct RawRow {
  std::vector<std::string> columns;
  std::size_t line = 0;
};

std::vector<RawRow> read_delimited(std::istream& in, char delimiter);
std::vector<RawRow> read_delimited_file(const std::string& path, char delimiter);

inline constexpr std::string_view kMissingToken = "MISSING";

// Per-field token -> index maps. Index 0 of every field is reserved for
// unknown or missing tokens; assigned indices are dense in [1, cardinality).
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::size_t num_fields);

  std::size_t num_fields() const { return maps_.size(); }
  std::size_t cardinality(std::size_t field) const { return tokens_[field].size() + 1; }
  std::vector<std::size_t> cardinalities() const;

  // Index for a token, 0 if unseen.
  std::uint32_t lookup(std::size_t field, std::string_view token) const;
  // Appends a new token and returns its index; returns the existing index if
  // the token is already present.
  std::uint32_t add(std::size_t field, std::string token);
  const std::string& token(std::size_t field, std::uint32_t index) const;

  // `field<TAB>token<TAB>index`, sorted by (field, index).
  void save(std::ostream& out, const FieldSchema& schema) const;
  void save_file(const std::string& path, const FieldSchema& schema) const;
  static Vocabulary load(std::istream& in, const FieldSchema& schema);
  static Vocabulary load_file(const std::string& path, const FieldSchema& schema);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::unordered_map<std::string, std::uint32_t>> maps_;
  std::vector<std::vector<std::string>> tokens_;  // tokens_[f][i-1] has index i
};

// Tokens counted at least min_count times get indices in first-seen order.
Vocabulary build_vocab(const std::vector<RawRow>& rows, const FieldSchema& schema,
                       std::size_t min_count);

// Empty input is missing. Values above 2 land in bucket "L<floor(ln(v)^2)>";
// anything else becomes its integer part, e.g. "1" or "-1".
std::string discretize_continuous(std::string_view value);

// The token a raw cell contributes for a field, after discretization.
std::string field_token(std::string_view cell, const FieldSpec& field);

struct EncodedInstance {
  std::vector<std::uint32_t> indices;
  int label = 0;
};

int parse_label(std::string_view text, std::size_t line);
EncodedInstance encode_instance(const RawRow& row, const FieldSchema& schema,
                                const Vocabulary& vocab);

// Flat storage of encoded instances: indices are row-major n x f.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::size_t num_fields) : num_fields_(num_fields) {}

  std::size_t num_fields() const { return num_fields_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  void push_back(const EncodedInstance& inst);
  void push_back(const std::uint32_t* indices, int label);
  EncodedInstance instance(std::size_t i) const;
  const std::uint32_t* indices(std::size_t i) const {
    return &indices_[i * num_fields_];
  }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }

  // Copy of the instances at the given positions, in order.
  Dataset subset(const std::vector<std::size_t>& rows) const;
  // Throws DataError if any index falls outside its field's cardinality.
  void validate(const std::vector<std::size_t>& cardinalities) const;

 private:
  std::size_t num_fields_ = 0;
  std::vector<std::uint32_t> indices_;
  std::vector<std::uint8_t> labels_;
};

Dataset encode_rows(const std::vector<RawRow>& rows, const FieldSchema& schema,
                    const Vocabulary& vocab);

// A minibatch. Nonempty; indices are row-major size() x num_fields.
struct EncodedBatch {
  std::size_t num_fields = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> labels;

  std::size_t size() const { return labels.size(); }
  const std::uint32_t* row(std::size_t b) const { return &indices[b * num_fields]; }
};

EncodedBatch make_batch(const Dataset& data, const std::vector<std::size_t>& rows);
EncodedBatch make_batch(const Dataset& data);

// Deterministic shuffle then floor(n * train_fraction) / remainder, as row
// positions.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_fraction, std::uint64_t seed);
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                  std::uint64_t seed);

// One epoch of batches covering every instance exactly once. A seed of
// nullopt keeps dataset order.
std::vector<EncodedBatch> batches(const Dataset& data, std::size_t batch_size,
                                  std::optional<std::uint64_t> shuffle_seed);

struct PlantedOptions {
  std::size_t cardinality = 100;  // tokens per field, excluding reserved 0
  double zipf_exponent = 1.0;
  double signal_scale = 1.0;      // std-dev of hidden per-token weights
};

struct PlantedData {
  FieldSchema schema;
  std::vector<std::size_t> cardinalities;
  Dataset data;
  // Hidden weight of every token in every signal field; index 0 unused.
  std::vector<std::vector<double>> token_weights;
};

// Labels follow Bernoulli(sigmoid(Σ_{signal fields} w[field][token])). The
// first `signal_fields` fields carry signal; the rest are independent noise.
PlantedData synthesize_planted(std::size_t num_fields, std::size_t signal_fields,
                               std::size_t n, std::uint64_t seed,
                               const PlantedOptions& options = {});

// Token i of every field is the string "i".
Vocabulary identity_vocabulary(const std::vector<std::size_t>& cardinalities);

// Writes instances as delimited text, label first, tokens via vocab.
void write_delimited(std::ostream& out, const Dataset& data, const Vocabulary& vocab,
                     char delimiter);

}  // namespace gatenet
