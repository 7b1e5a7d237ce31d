#include "noisylab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "noisylab/metrics.hpp"

namespace fs = std::filesystem;

namespace noisylab {

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError(fmt::format("cannot create directory {}: {}", dir.string(), ec.message()));
  }
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return exit_io;
  } catch (const TabularError& e) {
    err << "input error: " << e.what() << '\n';
    return exit_io;
  } catch (const TraceFormatError& e) {
    err << "input error: " << e.what() << '\n';
    return exit_io;
  } catch (const NumericalError& e) {
    err << "numerical abort: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::domain_error& e) {
    err << "numerical abort: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : "absent"; }

struct ChildMetrics {
  double best = 0.0;
  double last = 0.0;
};

ChildMetrics read_child_metrics(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError(fmt::format("cannot read {}", csv.string()));
  std::string line;
  std::getline(in, line);
  ChildMetrics m;
  bool any = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t pos = 0;
    for (int i = 0; i < 5; ++i) pos = line.find(',', pos) + 1;
    const double acc = std::stod(line.substr(pos, line.find(',', pos) - pos));
    m.best = any ? std::max(m.best, acc) : acc;
    m.last = acc;
    any = true;
  }
  if (!any) throw IoError(fmt::format("{} has no rows", csv.string()));
  return m;
}

}  // namespace

RunOutcome execute_run(const RunConfig& config, const fs::path& dir) {
  validate_config(config);
  RunOutcome outcome{build_plan(config), {}, dir};
  const NoisyDataset dataset = build_dataset(config);
  Mlp model = build_model(config, dataset);

  ensure_dir(dir);
  {
    auto cfg = open_out(dir / "config.txt");
    cfg << render_config(config);
  }
  std::ofstream trace;
  RunHooks hooks;
  if (config.loss_trace) {
    trace = open_out(dir / "loss_trace.csv");
    write_loss_trace_header(trace);
    hooks.loss_trace = [&trace](const std::vector<LossTraceRow>& rows) { write_loss_trace_rows(trace, rows); };
  }
  outcome.result = run(outcome.plan, dataset, model, hooks);

  const RunLabels labels{config.variant, config.noise, config.criterion};
  auto metrics = open_out(dir / "metrics.csv");
  write_metrics_csv(metrics, labels, outcome.result.epochs);
  auto summary = open_out(dir / "summary.json");
  summary << summary_json(labels, outcome.plan, outcome.result) << '\n';
  if (!metrics || !summary || (config.loss_trace && !trace)) {
    throw IoError(fmt::format("write failed under {}", dir.string()));
  }
  return outcome;
}

std::string run_dir_name(Variant variant, double noise, std::uint64_t seed) {
  return fmt::format("{}_n{}_s{}", to_string(variant), noise, seed);
}

std::vector<RunConfig> expand_matrix(const RunConfig& config) {
  if (config.variants.empty()) throw ConfigError("variants", "empty variant list");
  const auto noises = config.noise_rates.empty() ? std::vector<double>{config.noise} : config.noise_rates;
  const auto seeds = config.seeds.empty() ? std::vector<std::uint64_t>{config.seed} : config.seeds;
  std::vector<RunConfig> out;
  for (Variant v : config.variants) {
    for (double n : noises) {
      for (std::uint64_t s : seeds) {
        RunConfig child = config;
        child.variants.clear();
        child.noise_rates.clear();
        child.seeds.clear();
        child.variant = v;
        child.noise = n;
        child.seed = s;
        child.workers = 1;
        child.out = (fs::path(config.out) / run_dir_name(v, n, s)).string();
        out.push_back(std::move(child));
      }
    }
  }
  return out;
}

std::vector<AggregateRow> aggregate_runs(const std::vector<RunConfig>& runs, const fs::path& root) {
  std::vector<AggregateRow> rows;
  for (const auto& r : runs) {
    const auto m = read_child_metrics(root / run_dir_name(r.variant, r.noise, r.seed) / "metrics.csv");
    auto it = std::find_if(rows.begin(), rows.end(), [&](const AggregateRow& a) {
      return a.variant == r.variant && a.noise_rate == r.noise;
    });
    if (it == rows.end()) {
      rows.push_back({r.variant, r.noise, 0.0, 0.0, 0});
      it = rows.end() - 1;
    }
    it->best_mean += m.best;
    it->last_mean += m.last;
    ++it->runs;
  }
  for (auto& a : rows) {
    a.best_mean /= static_cast<double>(a.runs);
    a.last_mean /= static_cast<double>(a.runs);
  }
  return rows;
}

FitTraceReport fit_trace(const std::vector<LossTraceRow>& rows, std::optional<int> epoch,
                         std::size_t bins) {
  if (rows.empty()) throw TraceFormatError(1, "trace has no rows");
  if (bins == 0) throw std::invalid_argument("bins must be positive");
  FitTraceReport report;
  report.epoch = epoch.value_or(
      std::max_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.epoch < b.epoch; })
          ->epoch);
  std::vector<double> losses;
  std::vector<bool> noisy;
  for (const auto& r : rows) {
    if (r.epoch != report.epoch) continue;
    if (!(r.normalized_loss > 0.0 && r.normalized_loss < 1.0)) {
      throw std::invalid_argument(
          fmt::format("sample {}: normalized loss {} outside (0,1)", r.sample_id, r.normalized_loss));
    }
    losses.push_back(r.normalized_loss);
    noisy.push_back(r.is_actually_noisy);
  }
  if (losses.size() < 10) {
    throw std::invalid_argument(fmt::format("epoch {} has {} samples; need at least 10", report.epoch,
                                            losses.size()));
  }
  report.samples = losses.size();

  double mean = 0.0;
  for (double l : losses) mean += l;
  mean /= static_cast<double>(losses.size());
  double var = 0.0;
  for (double l : losses) var += (l - mean) * (l - mean);
  var /= static_cast<double>(losses.size());

  report.bmm = fit_bmm(losses);
  if (var < 1e-12) {
    report.degenerate = true;
  } else {
    report.gmm = fit_gmm(losses);
    report.bmm_auc = clean_noisy_auc(posterior_noisy(report.bmm, losses), noisy);
    report.gmm_auc = clean_noisy_auc(gmm_posterior_noisy(report.gmm, losses), noisy);
  }

  const double width = 1.0 / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double l : losses) ++counts[std::min(bins - 1, static_cast<std::size_t>(l / width))];
  for (std::size_t b = 0; b < bins; ++b) {
    FitTraceReport::Bin bin;
    bin.lo = static_cast<double>(b) * width;
    bin.hi = static_cast<double>(b + 1) * width;
    bin.empirical = static_cast<double>(counts[b]) / (static_cast<double>(losses.size()) * width);
    const double mid = 0.5 * (bin.lo + bin.hi);
    bin.bmm_pdf = report.bmm.pdf(mid);
    bin.gmm_pdf = report.degenerate ? 0.0 : report.gmm.pdf(mid);
    report.histogram.push_back(bin);
  }
  return report;
}

void print_fit_trace(std::ostream& out, const FitTraceReport& r) {
  fmt::print(out, "epoch {} ({} samples)\n", r.epoch, r.samples);
  if (r.degenerate) fmt::print(out, "degenerate input: all losses equal, symmetric fit\n");
  const auto& b = r.bmm;
  for (int k : {b.clean_component, b.noisy_component()}) {
    fmt::print(out, "bmm {:5} lambda={:.4f} alpha={:.4f} beta={:.4f} mean={:.4f}\n",
               k == b.clean_component ? "clean" : "noisy", b.lambda[k], b.alpha[k], b.beta[k], b.mean(k));
  }
  if (!r.degenerate) {
    const auto& g = r.gmm;
    const int noisy = g.noisy_component();
    for (int k : {1 - noisy, noisy}) {
      fmt::print(out, "gmm {:5} lambda={:.4f} mu={:.4f} sigma2={:.6f}\n", k == noisy ? "noisy" : "clean",
                 g.lambda[k], g.mu[k], g.sigma2[k]);
    }
  }
  fmt::print(out, "auc bmm={} gmm={}\n", fmt_opt(r.bmm_auc), fmt_opt(r.gmm_auc));
  fmt::print(out, "bin_lo,bin_hi,empirical_density,bmm_pdf,gmm_pdf\n");
  for (const auto& bin : r.histogram) {
    fmt::print(out, "{:.4f},{:.4f},{:.6f},{:.6f},{:.6f}\n", bin.lo, bin.hi, bin.empirical, bin.bmm_pdf,
               bin.gmm_pdf);
  }
}

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto outcome = execute_run(config, config.out);
    const auto& s = outcome.result.summary;
    fmt::print(out, "{} noise={} best={:.4f} (epoch {}) last={:.4f}\n", to_string(config.variant), config.noise,
               s.best_accuracy, s.best_epoch, s.last_accuracy);
    if (s.diverged) fmt::print(out, "diverged at epoch {}\n", *s.diverged_epoch);
    fmt::print(out, "wrote {}\n", outcome.dir.string());
    return static_cast<int>(exit_ok);
  });
}

int cmd_matrix(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    validate_config(config);
    const auto jobs = expand_matrix(config);
    for (const auto& j : jobs) validate_config(j);
    ensure_dir(config.out);

    std::atomic<std::size_t> next{0};
    std::mutex lock;
    std::vector<std::exception_ptr> failures(jobs.size());
    auto worker = [&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        try {
          const auto outcome = execute_run(jobs[i], jobs[i].out);
          std::lock_guard<std::mutex> guard(lock);
          fmt::print(out, "done {} best={:.4f} last={:.4f}{}\n", fs::path(jobs[i].out).filename().string(),
                     outcome.result.summary.best_accuracy, outcome.result.summary.last_accuracy,
                     outcome.result.summary.diverged ? " (diverged)" : "");
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    };
    const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.workers), jobs.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& f : failures)
      if (f) std::rethrow_exception(f);

    const auto rows = aggregate_runs(jobs, config.out);
    auto agg = open_out(fs::path(config.out) / "aggregate.csv");
    agg << "variant,noise_rate,runs,best_mean,last_mean\n";
    for (const auto& a : rows) {
      agg << fmt::format("{},{},{},{},{}\n", to_string(a.variant), a.noise_rate, a.runs, a.best_mean, a.last_mean);
    }

    // Variant x noise table of best/last percentages.
    std::vector<double> noises;
    for (const auto& a : rows)
      if (std::find(noises.begin(), noises.end(), a.noise_rate) == noises.end()) noises.push_back(a.noise_rate);
    fmt::print(out, "{:<12}", "variant");
    for (double n : noises) fmt::print(out, " {:>13}", fmt::format("{}%", n * 100));
    fmt::print(out, "\n");
    std::vector<Variant> order;
    for (const auto& a : rows)
      if (std::find(order.begin(), order.end(), a.variant) == order.end()) order.push_back(a.variant);
    for (Variant v : order) {
      fmt::print(out, "{:<12}", to_string(v));
      for (double n : noises) {
        auto it = std::find_if(rows.begin(), rows.end(),
                               [&](const AggregateRow& a) { return a.variant == v && a.noise_rate == n; });
        fmt::print(out, " {:>13}", fmt::format("{:.1f}/{:.1f}", it->best_mean * 100, it->last_mean * 100));
      }
      fmt::print(out, "\n");
    }
    return static_cast<int>(exit_ok);
  });
}

int cmd_fit_trace(const fs::path& trace, std::optional<int> epoch, std::size_t bins, std::ostream& out,
                  std::ostream& err) {
  return guarded(err, [&] {
    std::ifstream in(trace);
    if (!in) throw IoError(fmt::format("cannot read {}", trace.string()));
    print_fit_trace(out, fit_trace(read_loss_trace(in), epoch, bins));
    return static_cast<int>(exit_ok);
  });
}

}  // namespace noisylab
