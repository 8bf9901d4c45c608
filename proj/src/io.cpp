#include "gla/io.hpp"

#include <fmt/format.h>
#include <unistd.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "gla/errors.hpp"
#include "json.hpp"

namespace gla::io {

using json = nlohmann::ordered_json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      return fields;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(std::string_view s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.17g}", v);
}

}  // namespace

LabelledLogits LogitFile::labelled_logits() const {
  if (!labels) throw InvalidInput("logit file has unlabelled rows");
  return {logits, *labels};
}

LogitFile parse_logits(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::optional<std::size_t> k;
  std::vector<double> scores;
  std::vector<int> labels;
  bool any_unlabelled = false;
  std::size_t unlabelled_rows = 0;

  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto fields = split_fields(line);
    if (!k) {
      if (fields.size() < 3 || fields[0] != "label") {
        throw ParseError("header must be 'label,c0,c1,...' with at least two classes", line_no);
      }
      for (std::size_t c = 1; c < fields.size(); ++c) {
        if (fields[c] != "c" + std::to_string(c - 1)) {
          throw ParseError("header column " + std::to_string(c) + " should be 'c" +
                               std::to_string(c - 1) + "'",
                           line_no);
        }
      }
      k = fields.size() - 1;
      continue;
    }
    if (fields.size() != *k + 1) {
      throw ParseError("expected " + std::to_string(*k + 1) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    if (fields[0].empty()) {
      any_unlabelled = true;
      ++unlabelled_rows;
      labels.push_back(-1);
    } else {
      const auto label = parse_int(fields[0]);
      if (!label || *label < 0 || *label >= static_cast<long long>(*k)) {
        throw ParseError("label '" + std::string(fields[0]) + "' is not a class index in [0, " +
                             std::to_string(*k) + ")",
                         line_no);
      }
      labels.push_back(static_cast<int>(*label));
    }
    for (std::size_t c = 1; c <= *k; ++c) {
      const auto v = parse_double(fields[c]);
      if (!v) {
        throw ParseError("logit '" + std::string(fields[c]) + "' is not a finite number",
                         line_no);
      }
      scores.push_back(*v);
    }
    if (end == text.size()) break;
  }
  if (!k) throw ParseError("missing header", line_no);
  if (labels.empty()) throw ParseError("no data rows", line_no);

  LogitFile file{LogitTable(labels.size(), *k, std::move(scores)), std::nullopt, {}};
  if (any_unlabelled) {
    file.warnings.push_back(std::to_string(unlabelled_rows) +
                            " unlabelled row(s); labels discarded for the whole file");
  } else {
    file.labels = std::move(labels);
  }
  return file;
}

LogitFile load_logits(const std::filesystem::path& path) { return parse_logits(read_file(path)); }

std::string format_logits(const LogitTable& logits, const std::vector<int>* labels) {
  if (labels && labels->size() != logits.n_examples()) {
    throw DimensionError("label count does not match logit rows");
  }
  std::string out = "label";
  for (std::size_t c = 0; c < logits.n_classes(); ++c) out += fmt::format(",c{}", c);
  out += '\n';
  for (std::size_t r = 0; r < logits.n_examples(); ++r) {
    if (labels) out += std::to_string((*labels)[r]);
    for (double v : logits.row(r)) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void save_logits(const std::filesystem::path& path, const LogitTable& logits,
                 const std::vector<int>* labels) {
  atomic_write(path, format_logits(logits, labels));
}

std::string format_prior(const PriorRecord& prior) {
  json doc;
  doc["k"] = prior.probs.size();
  doc["probs"] = prior.probs.vector();
  doc["estimator"] = prior.estimator;
  doc["source_split"] = prior.source_split;
  doc["seed"] = prior.seed ? json(*prior.seed) : json(nullptr);
  doc["created_at"] = prior.created_at;
  return doc.dump(2) + "\n";
}

PriorRecord parse_prior(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("prior document is not valid JSON: ") + e.what(), 1);
  }
  try {
    std::vector<double> probs = doc.at("probs").get<std::vector<double>>();
    if (doc.contains("k") && doc["k"].get<std::size_t>() != probs.size()) {
      throw InvalidInput("prior k does not match the length of probs");
    }
    double mass = 0.0;
    for (double p : probs) {
      if (!std::isfinite(p) || p < 0.0) throw InvalidInput("prior probabilities must be >= 0");
      mass += p;
    }
    if (std::abs(mass - 1.0) > 1e-6) {
      throw InvalidInput("prior probabilities sum to " + format_double(mass) + ", expected 1");
    }
    PriorRecord rec{ProbabilitySimplex::normalized(std::move(probs))};
    rec.estimator = doc.value("estimator", std::string("given"));
    rec.source_split = doc.value("source_split", std::string());
    if (doc.contains("seed") && !doc["seed"].is_null()) rec.seed = doc["seed"].get<std::uint64_t>();
    rec.created_at = doc.value("created_at", std::string());
    return rec;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed prior document: ") + e.what(), 1);
  }
}

void save_prior(const std::filesystem::path& path, const PriorRecord& prior) {
  atomic_write(path, format_prior(prior));
}

PriorRecord load_prior(const std::filesystem::path& path) { return parse_prior(read_file(path)); }

namespace {

void reject_unknown(const json& obj, const std::string& prefix,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError("config key '" + prefix + "' must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!keys.count(item.key())) {
      throw ConfigError("unknown config key '" + (prefix.empty() ? "" : prefix + ".") +
                        item.key() + "'");
    }
  }
}

template <typename T>
void read_key(const json& obj, const char* key, const std::string& prefix, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + prefix + "." + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(doc, "", {"method1", "power_iter", "task", "study", "floor"});
  RunConfig cfg;
  if (doc.contains("floor")) {
    double floor = 0.0;
    read_key(doc, "floor", "", floor);
    cfg.floor = floor;
  }
  if (doc.contains("method1")) {
    const auto& m = doc["method1"];
    reject_unknown(m, "method1", {"steps", "primal_lr", "dual_lr", "surrogate"});
    read_key(m, "steps", "method1", cfg.method1.steps);
    read_key(m, "primal_lr", "method1", cfg.method1.primal_lr);
    read_key(m, "dual_lr", "method1", cfg.method1.dual_lr);
    std::string surrogate = "cross_entropy";
    read_key(m, "surrogate", "method1", surrogate);
    if (surrogate != "cross_entropy") {
      throw ConfigError("config key 'method1.surrogate' must be \"cross_entropy\"");
    }
  }
  if (doc.contains("power_iter")) {
    const auto& p = doc["power_iter"];
    reject_unknown(p, "power_iter", {"tol", "max_iters"});
    read_key(p, "tol", "power_iter", cfg.power_iter.tol);
    read_key(p, "max_iters", "power_iter", cfg.power_iter.max_iters);
  }
  if (doc.contains("task")) {
    const auto& t = doc["task"];
    reject_unknown(t, "task",
                   {"k", "dim", "mean_separation", "noise_sigma", "pretrain_prior", "source_prior",
                    "seed"});
    read_key(t, "k", "task", cfg.task.k);
    read_key(t, "dim", "task", cfg.task.dim);
    read_key(t, "mean_separation", "task", cfg.task.mean_separation);
    read_key(t, "noise_sigma", "task", cfg.task.noise_sigma);
    read_key(t, "seed", "task", cfg.task.seed);
    auto read_prior = [&](const char* key) {
      if (!t.contains(key)) return ProbabilitySimplex::uniform(cfg.task.k);
      std::vector<double> probs;
      read_key(t, key, "task", probs);
      try {
        return ProbabilitySimplex(std::move(probs), 1e-6);
      } catch (const InvalidInput& e) {
        throw ConfigError(std::string("config key 'task.") + key + "': " + e.what());
      }
    };
    if (cfg.task.k < 2) throw ConfigError("config key 'task.k' must be at least 2");
    cfg.task.pretrain_prior = read_prior("pretrain_prior");
    cfg.task.source_prior = read_prior("source_prior");
  }
  if (doc.contains("study")) {
    const auto& s = doc["study"];
    reject_unknown(s, "study", {"shots", "trials", "delta", "base_seed"});
    read_key(s, "shots", "study", cfg.study.shots);
    read_key(s, "trials", "study", cfg.study.trials);
    read_key(s, "delta", "study", cfg.study.delta);
    read_key(s, "base_seed", "study", cfg.study.base_seed);
  }

  try {
    cfg.method1.validate();
    cfg.power_iter.validate();
    cfg.task.validate();
    BoundQuery{2, 1, cfg.study.delta}.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  if (cfg.floor && !(*cfg.floor > 0.0)) throw ConfigError("config key 'floor' must be positive");
  if (cfg.study.trials < 1) throw ConfigError("config key 'study.trials' must be at least 1");
  if (cfg.study.shots.empty()) throw ConfigError("config key 'study.shots' must be nonempty");
  for (std::size_t n : cfg.study.shots) {
    if (n < 1) throw ConfigError("config key 'study.shots' entries must be positive");
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(text);
}

std::string format_report(const EvalReport& report) {
  json doc;
  doc["n_examples"] = report.n_examples;
  doc["top1_accuracy"] = report.top1_accuracy;
  doc["balanced_accuracy"] =
      report.balanced_accuracy ? json(*report.balanced_accuracy) : json(nullptr);
  json per_class = json::array();
  for (const auto& acc : report.per_class_accuracy) {
    per_class.push_back(acc ? json(*acc) : json(nullptr));
  }
  doc["per_class_accuracy"] = per_class;
  doc["per_class_count"] = report.per_class_count;
  if (report.breakdown) {
    const auto& b = *report.breakdown;
    doc["breakdown"] = {
        {"head", {{"classes", b.head}, {"accuracy", b.head_accuracy}}},
        {"medium", {{"classes", b.medium}, {"accuracy", b.medium_accuracy}}},
        {"tail", {{"classes", b.tail}, {"accuracy", b.tail_accuracy}}},
    };
  } else {
    doc["breakdown"] = nullptr;
  }
  json meta = json::object();
  for (const auto& [key, value] : report.metadata) meta[key] = value;
  doc["metadata"] = meta;
  return doc.dump(2) + "\n";
}

void save_report(const std::filesystem::path& path, const EvalReport& report) {
  atomic_write(path, format_report(report));
}

std::string format_study_csv(const ConvergenceStudy& study) {
  std::string out = "n,mean_l1,std,bound\n";
  for (const auto& row : study.rows) {
    out += fmt::format("{},{},{},{}\n", row.n, format_double(row.mean_l1), format_double(row.std),
                       format_double(row.bound));
  }
  return out;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += fmt::format(".tmp.{}", static_cast<long>(::getpid()));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string provenance_timestamp(bool seeded) {
  std::time_t t = 0;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    if (const auto v = parse_int(epoch)) t = static_cast<std::time_t>(*v);
  } else if (!seeded) {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm utc{};
  gmtime_r(&t, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

}  // namespace gla::io
