#include "noisylab/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace noisylab {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    out.push_back(trim(text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw ConfigError(std::string(key), fmt::format("'{}' is not a valid number", text));
  }
  return v;
}

template <typename T>
std::vector<T> parse_numbers(std::string_view key, std::string_view text) {
  std::vector<T> out;
  for (auto item : split_list(text)) out.push_back(parse_number<T>(key, item));
  return out;
}

Variant parse_variant_or_throw(std::string_view key, std::string_view text) {
  if (auto v = parse_variant(text)) return *v;
  throw ConfigError(std::string(key), fmt::format("unknown variant '{}'", text));
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw ConfigError(std::string(key), fmt::format("expected true/false, got '{}'", text));
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;
using Getter = std::function<std::optional<std::string>(const RunConfig&)>;

struct Field {
  std::string key;
  Setter set;
  Getter get;
};

template <typename T>
std::string join(const std::vector<T>& values) {
  return fmt::format("{}", fmt::join(values, ","));
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    auto text = [&f](std::string key, std::string RunConfig::*member) {
      f.push_back({key, [member](RunConfig& c, std::string_view, std::string_view v) { c.*member = std::string(v); },
                   [member](const RunConfig& c) { return std::optional<std::string>(c.*member); }});
    };
    auto number = [&f]<typename T>(std::string key, T RunConfig::*member) {
      f.push_back({key,
                   [member](RunConfig& c, std::string_view k, std::string_view v) {
                     c.*member = parse_number<T>(k, v);
                   },
                   [member](const RunConfig& c) {
                     return std::optional<std::string>(fmt::format("{}", c.*member));
                   }});
    };
    auto maybe_int = [&f](std::string key, std::optional<int> RunConfig::*member) {
      f.push_back({key,
                   [member](RunConfig& c, std::string_view k, std::string_view v) {
                     c.*member = parse_number<int>(k, v);
                   },
                   [member](const RunConfig& c) -> std::optional<std::string> {
                     if (!(c.*member)) return std::nullopt;
                     return fmt::format("{}", *(c.*member));
                   }});
    };

    f.push_back({"dataset",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   if (v != "csv" && !parse_synthetic_kind(v)) {
                     throw ConfigError(std::string(k), fmt::format("unknown dataset '{}'", v));
                   }
                   c.dataset = std::string(v);
                 },
                 [](const RunConfig& c) { return std::optional<std::string>(c.dataset); }});
    text("csv-path", &RunConfig::csv_path);
    text("label-col", &RunConfig::label_col);
    number("samples", &RunConfig::samples);
    number("dim", &RunConfig::dim);
    number("classes", &RunConfig::classes);
    number("blob-spread", &RunConfig::blob_spread);
    number("validation-fraction", &RunConfig::validation_fraction);
    number("noise", &RunConfig::noise);
    f.push_back({"criterion",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   auto parsed = parse_criterion(v);
                   if (!parsed) throw ConfigError(std::string(k), fmt::format("unknown criterion '{}'", v));
                   c.criterion = *parsed;
                 },
                 [](const RunConfig& c) { return std::optional<std::string>(to_string(c.criterion)); }});
    f.push_back({"variant",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   c.variant = parse_variant_or_throw(k, v);
                 },
                 [](const RunConfig& c) { return std::optional<std::string>(to_string(c.variant)); }});
    f.push_back({"schedule",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   auto parsed = parse_schedule(v);
                   if (!parsed) throw ConfigError(std::string(k), fmt::format("unknown schedule '{}'", v));
                   c.schedule = *parsed;
                 },
                 [](const RunConfig& c) -> std::optional<std::string> {
                   if (!c.schedule) return std::nullopt;
                   return std::string(to_string(*c.schedule));
                 }});
    number("epochs", &RunConfig::epochs);
    number("lr", &RunConfig::lr);
    f.push_back({"lr-drops",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   c.lr_drops = parse_numbers<int>(k, v);
                 },
                 [](const RunConfig& c) -> std::optional<std::string> {
                   if (!c.lr_drops) return std::nullopt;
                   return join(*c.lr_drops);
                 }});
    number("lr-factor", &RunConfig::lr_factor);
    maybe_int("warmup", &RunConfig::warmup);
    maybe_int("dyn-mixup-start", &RunConfig::dyn_mixup_start);
    maybe_int("bootstrap-start", &RunConfig::bootstrap_start);
    maybe_int("temp-decay-end", &RunConfig::temp_decay_end);
    number("alpha-mixup", &RunConfig::alpha_mixup);
    number("eta", &RunConfig::eta);
    number("refit-period", &RunConfig::refit_period);
    number("em-iterations", &RunConfig::em_iterations);
    number("batch-size", &RunConfig::batch_size);
    number("momentum", &RunConfig::momentum);
    number("weight-decay", &RunConfig::weight_decay);
    number("seed", &RunConfig::seed);
    f.push_back({"hidden",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   c.hidden = parse_numbers<std::size_t>(k, v);
                 },
                 [](const RunConfig& c) { return std::optional<std::string>(join(c.hidden)); }});
    text("out", &RunConfig::out);
    number("workers", &RunConfig::workers);
    f.push_back({"loss-trace",
                 [](RunConfig& c, std::string_view k, std::string_view v) { c.loss_trace = parse_bool(k, v); },
                 [](const RunConfig& c) {
                   return std::optional<std::string>(c.loss_trace ? "true" : "false");
                 }});
    f.push_back({"variants",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   c.variants.clear();
                   for (auto item : split_list(v)) c.variants.push_back(parse_variant_or_throw(k, item));
                 },
                 [](const RunConfig& c) -> std::optional<std::string> {
                   if (c.variants.empty()) return std::nullopt;
                   std::vector<std::string_view> names;
                   for (Variant v : c.variants) names.push_back(to_string(v));
                   return join(names);
                 }});
    f.push_back({"noise-rates",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   c.noise_rates = parse_numbers<double>(k, v);
                 },
                 [](const RunConfig& c) -> std::optional<std::string> {
                   if (c.noise_rates.empty()) return std::nullopt;
                   return join(c.noise_rates);
                 }});
    f.push_back({"seeds",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   c.seeds = parse_numbers<std::uint64_t>(k, v);
                 },
                 [](const RunConfig& c) -> std::optional<std::string> {
                   if (c.seeds.empty()) return std::nullopt;
                   return join(c.seeds);
                 }});
    return f;
  }();
  return table;
}

const Field* find_field(std::string_view key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

}  // namespace

ConfigError::ConfigError(std::string key, const std::string& what)
    : std::invalid_argument(fmt::format("{}: {}", key, what)), key_(std::move(key)) {}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return keys;
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
  const Field* f = find_field(key);
  if (f == nullptr) throw ConfigError(std::string(key), "unknown setting");
  f->set(config, key, value);
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t stop = text.find('\n', start);
    if (stop == std::string_view::npos) stop = text.size();
    const std::string_view line = trim(text.substr(start, stop - start));
    start = stop + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(line), fmt::format("line {}: expected key=value", line_no));
    }
    apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

std::string render_config(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) {
    if (auto v = f.get(config)) out += fmt::format("{}={}\n", f.key, *v);
  }
  return out;
}

void validate_config(const RunConfig& c) {
  std::vector<Variant> variants = c.variants.empty() ? std::vector<Variant>{c.variant} : c.variants;
  for (Variant v : variants) {
    if (c.temp_decay_end && !uses_temperature_decay(v)) {
      throw ConfigError("temp-decay-end", fmt::format("variant {} has no temperature decay", to_string(v)));
    }
    if (c.dyn_mixup_start && !uses_dynamic_mixup(v)) {
      throw ConfigError("dyn-mixup-start", fmt::format("variant {} has no dynamic mixup", to_string(v)));
    }
    if (c.bootstrap_start && !uses_bootstrapping(v)) {
      throw ConfigError("bootstrap-start", fmt::format("variant {} does not bootstrap", to_string(v)));
    }
  }
  if (c.dataset == "csv" && c.csv_path.empty()) throw ConfigError("csv-path", "required for dataset=csv");
  if (c.dataset != "csv" && !c.csv_path.empty()) {
    throw ConfigError("csv-path", fmt::format("given, but dataset is '{}'", c.dataset));
  }
  auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (!rate_ok(c.noise)) throw ConfigError("noise", "must lie in [0,1]");
  for (double r : c.noise_rates)
    if (!rate_ok(r)) throw ConfigError("noise-rates", fmt::format("{} outside [0,1]", r));
  if (!(c.validation_fraction > 0.0 && c.validation_fraction < 1.0)) {
    throw ConfigError("validation-fraction", "must lie in (0,1)");
  }
  if (c.classes < 2) throw ConfigError("classes", "need at least 2");
  if (c.dim < 1) throw ConfigError("dim", "must be positive");
  if (c.samples < 2 * c.classes) throw ConfigError("samples", "need at least two per class");
  if (!(c.blob_spread > 0.0)) throw ConfigError("blob-spread", "must be positive");
  if (c.epochs < 0) throw ConfigError("epochs", "must be nonnegative");
  if (c.workers < 1) throw ConfigError("workers", "must be at least 1");
  if (c.hidden.empty()) throw ConfigError("hidden", "need at least one hidden layer");
  for (auto h : c.hidden)
    if (h == 0) throw ConfigError("hidden", "widths must be positive");
  if (c.out.empty()) throw ConfigError("out", "output directory required");

  for (Variant v : variants) {
    RunConfig single = c;
    single.variant = v;
    (void)build_plan(single);
  }
}

std::uint64_t data_seed(const RunConfig& c) { return c.seed; }
std::uint64_t noise_seed(const RunConfig& c) { return c.seed ^ 0x9e3779b97f4a7c15ULL; }
std::uint64_t model_seed(const RunConfig& c) { return c.seed + 0x5851f42d4c957f2dULL; }

TrainPlan build_plan(const RunConfig& c) {
  TrainPlan p = TrainPlan::make(c.variant, c.seed, c.epochs, c.schedule);
  p.lr.initial = c.lr;
  p.lr.factor = c.lr_factor;
  if (c.lr_drops) p.lr.drop_epochs = *c.lr_drops;
  if (c.warmup) {
    p.warmup_epochs = *c.warmup;
    p.dyn_mixup_start_epoch = p.warmup_epochs + 1;
    p.bootstrap_start_epoch = p.warmup_epochs + (uses_dynamic_mixup(c.variant) ? 2 : 1);
    p.temp_decay_end_epoch = std::max(p.temp_decay_end_epoch, p.bootstrap_start_epoch + 1);
  }
  if (c.dyn_mixup_start) p.dyn_mixup_start_epoch = *c.dyn_mixup_start;
  if (c.bootstrap_start) p.bootstrap_start_epoch = *c.bootstrap_start;
  if (c.temp_decay_end) p.temp_decay_end_epoch = *c.temp_decay_end;
  p.mixup_alpha = c.alpha_mixup;
  p.eta = c.eta;
  p.refit_period_epochs = c.refit_period;
  p.em_iterations = c.em_iterations;
  p.batch_size = c.batch_size;
  p.momentum = c.momentum;
  p.weight_decay = c.weight_decay;
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    throw ConfigError(colon == std::string::npos ? "plan" : msg.substr(0, colon),
                      colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  return p;
}

NoisyDataset build_dataset(const RunConfig& c) {
  NoisyDataset clean = [&] {
    if (c.dataset == "csv") return ingest_tabular(c.csv_path, c.label_col, c.validation_fraction, data_seed(c));
    SyntheticSpec spec;
    spec.kind = *parse_synthetic_kind(c.dataset);
    spec.samples = c.samples;
    spec.dim = c.dim;
    spec.classes = c.classes;
    spec.seed = data_seed(c);
    spec.validation_fraction = c.validation_fraction;
    spec.blob_spread = c.blob_spread;
    return make_synthetic(spec);
  }();
  return inject_noise(clean, NoiseSpec{c.noise, c.criterion, noise_seed(c)});
}

Mlp build_model(const RunConfig& c, const NoisyDataset& dataset) {
  std::vector<std::size_t> widths{dataset.dim()};
  widths.insert(widths.end(), c.hidden.begin(), c.hidden.end());
  widths.push_back(dataset.classes());
  return Mlp(widths, model_seed(c));
}

}  // namespace noisylab
