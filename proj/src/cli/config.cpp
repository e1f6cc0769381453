#include "gatenet/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "gatenet/error.hpp"

namespace gatenet::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    auto part = trim(text.substr(start, end - start));
    if (!part.empty()) out.push_back(part);
    start = end + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

std::size_t parse_positive(std::string_view text) {
  const auto v = parse_number<std::size_t>(text);
  if (v == 0) throw ConfigError("expected a positive integer, got '" + std::string(text) + "'");
  return v;
}

double parse_unit_interval(std::string_view text, bool allow_zero) {
  const double v = parse_number<double>(text);
  if (!(v < 1.0 && (allow_zero ? v >= 0.0 : v > 0.0))) {
    throw ConfigError(std::string("expected a value in ") + (allow_zero ? "[0, 1)" : "(0, 1)") +
                      ", got '" + std::string(text) + "'");
  }
  return v;
}

bool parse_flag(std::string_view text) {
  if (text == "on" || text == "true" || text == "1") return true;
  if (text == "off" || text == "false" || text == "0") return false;
  throw ConfigError("expected on/off, got '" + std::string(text) + "'");
}

ops::InitScheme parse_init(std::string_view text) {
  if (text == "glorot") return ops::InitScheme::kGlorotUniform;
  if (text == "zeros") return ops::InitScheme::kZeros;
  throw ConfigError("unknown init scheme '" + std::string(text) + "' (valid: glorot, zeros)");
}

std::string init_name(ops::InitScheme s) {
  return s == ops::InitScheme::kZeros ? "zeros" : "glorot";
}

char parse_delimiter(std::string_view text) {
  if (text == "tab" || text == "\\t") return '\t';
  if (text == "comma") return ',';
  if (text.size() == 1) return text[0];
  throw ConfigError("delimiter must be tab, comma or a single character, got '" +
                    std::string(text) + "'");
}

std::string delimiter_name(char c) {
  if (c == '\t') return "tab";
  if (c == ',') return "comma";
  return std::string(1, c);
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string flag(bool b) { return b ? "on" : "off"; }

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& show) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += show(items[i]);
  }
  return out;
}

template <typename T, typename F>
std::vector<T> parse_list(std::string_view text, F&& parse_one) {
  std::vector<T> out;
  for (auto part : split_list(text)) out.push_back(parse_one(part));
  if (out.empty()) throw ConfigError("expected a nonempty comma-separated list");
  return out;
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Key>& registry() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    auto add = [&](std::string name, auto set, auto get) {
      k.push_back(Key{std::move(name), set, get});
    };
    // data
    add("data.source", [](RunConfig& c, std::string_view v) {
          if (v != "file" && v != "planted") {
            throw ConfigError("expected file or planted, got '" + std::string(v) + "'");
          }
          c.data.source = std::string(v);
        },
        [](const RunConfig& c) { return c.data.source; });
    add("data.train", [](RunConfig& c, std::string_view v) { c.data.train_path = std::string(v); },
        [](const RunConfig& c) { return c.data.train_path; });
    add("data.test", [](RunConfig& c, std::string_view v) { c.data.test_path = std::string(v); },
        [](const RunConfig& c) { return c.data.test_path; });
    add("data.delimiter", [](RunConfig& c, std::string_view v) { c.data.delimiter = parse_delimiter(v); },
        [](const RunConfig& c) { return delimiter_name(c.data.delimiter); });
    add("data.schema", [](RunConfig& c, std::string_view v) {
          if (!v.empty()) FieldSchema::parse(v);
          c.data.schema = std::string(v);
        },
        [](const RunConfig& c) { return c.data.schema; });
    add("data.min_count", [](RunConfig& c, std::string_view v) { c.data.min_count = parse_number<std::size_t>(v); },
        [](const RunConfig& c) { return std::to_string(c.data.min_count); });
    add("data.train_fraction", [](RunConfig& c, std::string_view v) { c.data.train_fraction = parse_unit_interval(v, false); },
        [](const RunConfig& c) { return fmt(c.data.train_fraction); });
    add("data.seed", [](RunConfig& c, std::string_view v) { c.data.seed = parse_number<std::uint64_t>(v); },
        [](const RunConfig& c) { return std::to_string(c.data.seed); });
    add("data.planted.fields", [](RunConfig& c, std::string_view v) { c.data.planted_fields = parse_positive(v); },
        [](const RunConfig& c) { return std::to_string(c.data.planted_fields); });
    add("data.planted.signal", [](RunConfig& c, std::string_view v) { c.data.planted_signal = parse_number<std::size_t>(v); },
        [](const RunConfig& c) { return std::to_string(c.data.planted_signal); });
    add("data.planted.n", [](RunConfig& c, std::string_view v) { c.data.planted_n = parse_positive(v); },
        [](const RunConfig& c) { return std::to_string(c.data.planted_n); });
    add("data.planted.cardinality", [](RunConfig& c, std::string_view v) { c.data.planted.cardinality = parse_positive(v); },
        [](const RunConfig& c) { return std::to_string(c.data.planted.cardinality); });
    add("data.planted.zipf", [](RunConfig& c, std::string_view v) { c.data.planted.zipf_exponent = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt(c.data.planted.zipf_exponent); });
    add("data.planted.signal_scale", [](RunConfig& c, std::string_view v) { c.data.planted.signal_scale = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt(c.data.planted.signal_scale); });
    // model
    add("model.family", [](RunConfig& c, std::string_view v) { c.model.family = parse_family(v); },
        [](const RunConfig& c) { return std::string(to_string(c.model.family)); });
    add("model.k", [](RunConfig& c, std::string_view v) { c.model.k = parse_positive(v); },
        [](const RunConfig& c) { return std::to_string(c.model.k); });
    add("model.hidden_widths", [](RunConfig& c, std::string_view v) {
          c.model.hidden_widths = parse_list<std::size_t>(v, parse_positive);
        },
        [](const RunConfig& c) {
          return join(c.model.hidden_widths, [](std::size_t w) { return std::to_string(w); });
        });
    add("model.hidden_activation", [](RunConfig& c, std::string_view v) { c.model.hidden_activation = ops::parse_activation(v); },
        [](const RunConfig& c) { return std::string(ops::to_string(c.model.hidden_activation)); });
    add("model.dropout", [](RunConfig& c, std::string_view v) { c.model.dropout = parse_unit_interval(v, true); },
        [](const RunConfig& c) { return fmt(c.model.dropout); });
    add("model.embed_gate", [](RunConfig& c, std::string_view v) {
          if (parse_flag(v)) {
            c.model.embed_gate = c.embed_gate;
          } else {
            c.model.embed_gate.reset();
          }
        },
        [](const RunConfig& c) { return flag(c.model.embed_gate.has_value()); });
    add("model.embed_gate.granularity", [](RunConfig& c, std::string_view v) { c.embed_gate.granularity = parse_granularity(v); },
        [](const RunConfig& c) { return std::string(to_string(c.embed_gate.granularity)); });
    add("model.embed_gate.sharing", [](RunConfig& c, std::string_view v) { c.embed_gate.sharing = parse_sharing(v); },
        [](const RunConfig& c) { return std::string(to_string(c.embed_gate.sharing)); });
    add("model.embed_gate.activation", [](RunConfig& c, std::string_view v) { c.embed_gate.activation = ops::parse_activation(v); },
        [](const RunConfig& c) { return std::string(ops::to_string(c.embed_gate.activation)); });
    add("model.embed_gate.bias", [](RunConfig& c, std::string_view v) { c.embed_gate.bias = parse_flag(v); },
        [](const RunConfig& c) { return flag(c.embed_gate.bias); });
    add("model.embed_gate.init", [](RunConfig& c, std::string_view v) { c.embed_gate.init = parse_init(v); },
        [](const RunConfig& c) { return init_name(c.embed_gate.init); });
    add("model.hidden_gate", [](RunConfig& c, std::string_view v) {
          if (parse_flag(v)) {
            c.model.hidden_gate = c.hidden_gate;
          } else {
            c.model.hidden_gate.reset();
          }
        },
        [](const RunConfig& c) { return flag(c.model.hidden_gate.has_value()); });
    add("model.hidden_gate.activation", [](RunConfig& c, std::string_view v) { c.hidden_gate.activation = ops::parse_activation(v); },
        [](const RunConfig& c) { return std::string(ops::to_string(c.hidden_gate.activation)); });
    add("model.hidden_gate.init", [](RunConfig& c, std::string_view v) { c.hidden_gate.init = parse_init(v); },
        [](const RunConfig& c) { return init_name(c.hidden_gate.init); });
    // train
    add("train.epochs", [](RunConfig& c, std::string_view v) { c.train.epochs = parse_number<std::size_t>(v); },
        [](const RunConfig& c) { return std::to_string(c.train.epochs); });
    add("train.batch_size", [](RunConfig& c, std::string_view v) { c.train.batch_size = parse_positive(v); },
        [](const RunConfig& c) { return std::to_string(c.train.batch_size); });
    add("train.lr", [](RunConfig& c, std::string_view v) {
          const double lr = parse_number<double>(v);
          if (!(lr >= 0.0)) throw ConfigError("learning rate must be nonnegative");
          c.train.adam.learning_rate = lr;
        },
        [](const RunConfig& c) { return fmt(c.train.adam.learning_rate); });
    add("train.beta1", [](RunConfig& c, std::string_view v) { c.train.adam.beta1 = parse_unit_interval(v, true); },
        [](const RunConfig& c) { return fmt(c.train.adam.beta1); });
    add("train.beta2", [](RunConfig& c, std::string_view v) { c.train.adam.beta2 = parse_unit_interval(v, true); },
        [](const RunConfig& c) { return fmt(c.train.adam.beta2); });
    add("train.epsilon", [](RunConfig& c, std::string_view v) { c.train.adam.epsilon = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt(c.train.adam.epsilon); });
    add("train.seed", [](RunConfig& c, std::string_view v) { c.train.seed = parse_number<std::uint64_t>(v); },
        [](const RunConfig& c) { return std::to_string(c.train.seed); });
    add("train.early_stop", [](RunConfig& c, std::string_view v) { c.train.early_stop = parse_flag(v); },
        [](const RunConfig& c) { return flag(c.train.early_stop); });
    add("train.report_wall_time", [](RunConfig& c, std::string_view v) { c.report_wall_time = parse_flag(v); },
        [](const RunConfig& c) { return flag(c.report_wall_time); });
    // ablate
    add("ablate.axes", [](RunConfig& c, std::string_view v) {
          static const std::vector<std::string> valid{"sharing", "granularity", "gate_activation",
                                                      "embedding_size", "depth", "gate_combo"};
          c.ablate.axes = parse_list<std::string>(v, [](std::string_view a) {
            if (std::find(valid.begin(), valid.end(), a) == valid.end()) {
              throw ConfigError("unknown ablation axis '" + std::string(a) +
                                "' (valid: sharing, granularity, gate_activation, "
                                "embedding_size, depth, gate_combo)");
            }
            return std::string(a);
          });
        },
        [](const RunConfig& c) { return join(c.ablate.axes, [](const std::string& s) { return s; }); });
    add("ablate.seeds", [](RunConfig& c, std::string_view v) {
          c.ablate.seeds = parse_list<std::uint64_t>(v, parse_number<std::uint64_t>);
        },
        [](const RunConfig& c) {
          return join(c.ablate.seeds, [](std::uint64_t s) { return std::to_string(s); });
        });
    add("ablate.families", [](RunConfig& c, std::string_view v) { c.ablate.families = parse_list<Family>(v, parse_family); },
        [](const RunConfig& c) {
          return join(c.ablate.families, [](Family f) { return std::string(to_string(f)); });
        });
    add("ablate.combo_families", [](RunConfig& c, std::string_view v) {
          c.ablate.combo_families = parse_list<Family>(v, parse_family);
          for (Family f : c.ablate.combo_families) {
            if (f == Family::kFM) throw ConfigError("gate combinations need a deep family");
          }
        },
        [](const RunConfig& c) {
          return join(c.ablate.combo_families, [](Family f) { return std::string(to_string(f)); });
        });
    add("ablate.tuning_family", [](RunConfig& c, std::string_view v) {
          c.ablate.tuning_family = parse_family(v);
          if (c.ablate.tuning_family == Family::kFM) {
            throw ConfigError("tuning family needs a deep part (dnn or deepfm)");
          }
        },
        [](const RunConfig& c) { return std::string(to_string(c.ablate.tuning_family)); });
    add("ablate.embedding_sizes", [](RunConfig& c, std::string_view v) {
          c.ablate.embedding_sizes = parse_list<std::size_t>(v, parse_positive);
        },
        [](const RunConfig& c) {
          return join(c.ablate.embedding_sizes, [](std::size_t s) { return std::to_string(s); });
        });
    add("ablate.depths", [](RunConfig& c, std::string_view v) { c.ablate.depths = parse_list<std::size_t>(v, parse_positive); },
        [](const RunConfig& c) {
          return join(c.ablate.depths, [](std::size_t s) { return std::to_string(s); });
        });
    add("ablate.activations", [](RunConfig& c, std::string_view v) {
          c.ablate.activations = parse_list<ops::Activation>(v, ops::parse_activation);
        },
        [](const RunConfig& c) {
          return join(c.ablate.activations,
                      [](ops::Activation a) { return std::string(ops::to_string(a)); });
        });
    return k;
  }();
  return keys;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : registry()) out.push_back(k.name);
  return out;
}

void RunConfig::apply(const std::vector<std::pair<std::string, std::string>>& entries) {
  std::map<std::string, const Key*, std::less<>> by_name;
  for (const auto& k : registry()) by_name[k.name] = &k;
  std::vector<std::string> problems;
  for (const auto& [key, value] : entries) {
    auto it = by_name.find(key);
    if (it == by_name.end()) {
      problems.push_back("unknown key '" + key + "'");
      continue;
    }
    try {
      it->second->set(*this, trim(value));
    } catch (const ConfigError& e) {
      problems.push_back(key + ": " + e.what());
    }
  }
  if (model.embed_gate) model.embed_gate = embed_gate;
  if (model.hidden_gate) model.hidden_gate = hidden_gate;
  try {
    model.validate();
  } catch (const ConfigError& e) {
    problems.push_back(e.what());
  }
  if (data.planted_signal > data.planted_fields) {
    problems.push_back("data.planted.signal exceeds data.planted.fields");
  }
  if (!problems.empty()) {
    std::string msg = "configuration errors (" + std::to_string(problems.size()) + "):";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  std::string section;
  for (const auto& k : registry()) {
    const auto dot = k.name.find('.');
    const std::string sec = k.name.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << k.name.substr(dot + 1) << " = " << k.get(*this) << '\n';
  }
  return out.str();
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::string section;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key(trim(line.substr(0, eq)));
    if (!section.empty()) key = section + "." + key;
    entries.emplace_back(std::move(key), std::string(trim(line.substr(eq + 1))));
  }
  return entries;
}

RunConfig parse_config(std::string_view text,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
  auto entries = parse_config_text(text);
  entries.insert(entries.end(), overrides.begin(), overrides.end());
  RunConfig config;
  config.apply(entries);
  return config;
}

RunConfig load_config(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& overrides) {
  if (path.empty()) return parse_config("", overrides);
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

std::pair<std::string, std::string> parse_assignment(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("expected key=value, got '" + std::string(text) + "'");
  }
  return {std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1)))};
}

}  // namespace gatenet::cli
