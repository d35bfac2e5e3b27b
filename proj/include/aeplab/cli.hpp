#pragma once
// Command-line surface. Subcommands: rate, rate-curve, ball, trajectory,
// pathology, rinf-bounds, selftest. All outputs are plot-ready CSV or JSON
// with "inf" (sign-prefixed where negative) as the one serialized infinity
// token; identical configuration and seeds produce byte-identical files.
// Exit codes: 0 success, 2 validation error, 3 resource-guard error,
// 4 selftest failure.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aeplab/aep.hpp"
#include "aeplab/ball.hpp"
#include "aeplab/model_io.hpp"
#include "aeplab/process_rate.hpp"
#include "aeplab/rate.hpp"

namespace aeplab::cli {

inline std::string fmt(double v) { return shortest_double(v); }

inline std::string fmt(const ExtReal& v) { return v.is_infinite() ? "inf" : fmt(v.value()); }

inline std::string fmt_log_prob(const std::optional<double>& lp) {
  return lp ? fmt(*lp) : "-inf";
}

namespace detail_cli {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline Rational parse_distortion(const std::string& text, const std::string& field) {
  Rational d(0);
  try {
    d = Rational::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument("field " + field + ": " + e.what());
  }
  if (d.is_negative()) throw std::invalid_argument("field " + field + ": must be >= 0");
  return d;
}

inline std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& tok : split(text, ',')) {
    if (tok.empty()) continue;
    try {
      seeds.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw std::invalid_argument("field --seeds: bad seed '" + tok + "'");
    }
  }
  if (seeds.empty()) throw std::invalid_argument("field --seeds: must be nonempty");
  return seeds;
}

inline std::uint64_t cell_cap_from_env() {
  const char* env = std::getenv("AEPLAB_STATE_CAP");
  if (!env) return kDefaultCellCap;
  try {
    return std::stoull(env);
  } catch (const std::exception&) {
    throw std::invalid_argument("environment variable AEPLAB_STATE_CAP: not an integer");
  }
}

class OutputSink {
 public:
  OutputSink(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      os_ = &fallback;
      return;
    }
    file_.open(path, std::ios::binary);
    if (!file_) throw std::invalid_argument("field --out: cannot open '" + path + "'");
    os_ = &file_;
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_ = nullptr;
};

struct ModelInputs {
  std::string model_path;
  std::string codebook_path;
  std::string rho_path;
  std::optional<LoadedModel> model;
  std::optional<LoadedModel> codebook;

  void load() {
    if (!model_path.empty()) model = load_model_file(model_path);
    if (!codebook_path.empty()) codebook = load_model_file(codebook_path);
  }

  DistortionMatrix resolve_rho() const {
    if (!rho_path.empty()) return load_rho_file(rho_path);
    if (model && model->rho) return *model->rho;
    if (codebook && codebook->rho) return *codebook->rho;
    throw std::invalid_argument(
        "field --rho: no distortion matrix given and none embedded in the model files");
  }
};

}  // namespace detail_cli

// Runs the fixed verification pair: the periodic-chain pattern and the
// Bernoulli(1/2)/Hamming convergence benchmark.
inline bool run_selftest(std::ostream& out) {
  bool ok = true;

  // periodic source vs point-mass codebook at D = 1/2: l_n alternates
  // inf, 0 from an X_1 = 1 start and is identically 0 from X_1 = 0
  auto source = ProcessModel::markov(RowMatrix::from_rationals(
      2, 2, {Rational(0), Rational(1), Rational(1), Rational(0)}));
  auto cb = ProcessModel::iid(FiniteDistribution::point_mass(2, 0));
  auto rho = DistortionMatrix::absolute(2, 2);
  bool saw_one = false, saw_zero = false, pattern_ok = true;
  for (std::uint64_t seed = 0; seed < 64 && !(saw_one && saw_zero); ++seed) {
    auto recs = run_trajectory(source, cb, rho, Rational(1, 2), 200, seed);
    const bool starts_one = recs[0].l_n.is_infinite();
    (starts_one ? saw_one : saw_zero) = true;
    for (const auto& r : recs) {
      const bool want_inf = starts_one && (r.n % 2 == 1);
      if (want_inf != r.l_n.is_infinite()) pattern_ok = false;
      if (!want_inf && !(r.l_n == ExtReal::finite(0.0))) pattern_ok = false;
    }
  }
  pattern_ok = pattern_ok && saw_one && saw_zero;
  out << (pattern_ok ? "periodic pattern: OK" : "periodic pattern: FAIL") << "\n";
  ok = ok && pattern_ok;

  // Bernoulli benchmark: l_2000 within 0.01 of 0.3680642 on >= 9 of 10 seeds
  auto coin = ProcessModel::iid(FiniteDistribution::uniform(2));
  auto hamming = DistortionMatrix::hamming(2);
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto recs = run_trajectory(coin, coin, hamming, Rational(1, 10), 2000, seed);
    const auto& last = recs.back();
    if (last.l_n.is_finite() && std::fabs(last.l_n.value() - 0.3680642) <= 0.01) ++hits;
  }
  const bool bern_ok = hits >= 9;
  out << (bern_ok ? "Bernoulli rate: OK" : "Bernoulli rate: FAIL") << "\n";
  return ok && bern_ok;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"aeplab: mismatched-codebook rate functions and distortion-ball probabilities"};
  app.require_subcommand(1);

  detail_cli::ModelInputs inputs;
  std::string distortion_text, grid_text, seeds_text = "1", mode_text = "exact", out_path,
              in_path;
  int n = 4, n_max = 1000;
  std::uint64_t trials = 100000;

  auto add_common = [&](CLI::App* cmd, bool need_model, bool need_codebook) {
    if (need_model) cmd->add_option("--model", inputs.model_path, "source model file")->required();
    if (need_codebook)
      cmd->add_option("--codebook", inputs.codebook_path, "codebook model file")->required();
    cmd->add_option("--rho", inputs.rho_path, "distortion matrix file");
    cmd->add_option("--out", out_path, "output file (default stdout)");
  };

  auto* rate_cmd = app.add_subcommand("rate", "R(P,Q,D) at one distortion level");
  add_common(rate_cmd, true, true);
  rate_cmd->add_option("--distortion", distortion_text, "D, rational or decimal")->required();

  auto* curve_cmd = app.add_subcommand("rate-curve", "R(P,Q,D) over a distortion grid");
  add_common(curve_cmd, true, true);
  curve_cmd->add_option("--grid", grid_text, "comma-separated strictly increasing D values")
      ->required();

  auto* ball_cmd = app.add_subcommand("ball", "batch distortion-ball queries");
  add_common(ball_cmd, false, false);
  ball_cmd->add_option("--in", in_path, "query file, one 'word model-file D' per line (default stdin)");

  auto* traj_cmd = app.add_subcommand("trajectory", "per-n trajectory records along sampled paths");
  add_common(traj_cmd, true, true);
  traj_cmd->add_option("--distortion", distortion_text)->required();
  traj_cmd->add_option("--n-max", n_max, "horizon")->required();
  traj_cmd->add_option("--seeds", seeds_text, "comma-separated seeds")->required();

  auto* path_cmd = app.add_subcommand("pathology", "pathology verdict plus ensemble evidence");
  add_common(path_cmd, true, true);
  path_cmd->add_option("--distortion", distortion_text)->required();
  path_cmd->add_option("--n-max", n_max, "horizon")->required();
  path_cmd->add_option("--seeds", seeds_text, "comma-separated seeds")->required();

  auto* rinf_cmd = app.add_subcommand("rinf-bounds", "certified interval for R_inf");
  add_common(rinf_cmd, true, true);
  rinf_cmd->add_option("--distortion", distortion_text)->required();
  rinf_cmd->add_option("--n", n, "block length")->required();
  rinf_cmd->add_option("--mode", mode_text, "exact|mc");
  rinf_cmd->add_option("--trials", trials, "Monte Carlo trials");
  rinf_cmd->add_option("--seeds", seeds_text, "Monte Carlo seed (first entry used)");

  auto* self_cmd = app.add_subcommand("selftest", "run the built-in verification pair");
  self_cmd->add_option("--out", out_path, "output file (default stdout)");

  std::vector<const char*> argv;
  argv.push_back("aeplab");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    const std::uint64_t cell_cap = detail_cli::cell_cap_from_env();
    inputs.load();
    detail_cli::OutputSink sink(out_path, out);
    std::ostream& os = sink.stream();

    if (*rate_cmd || *curve_cmd) {
      const auto& p = inputs.model->model.marginal();
      const auto& q = inputs.codebook->model.marginal();
      auto rho = inputs.resolve_rho();
      std::vector<Rational> ds;
      if (*rate_cmd) {
        ds.push_back(detail_cli::parse_distortion(distortion_text, "--distortion"));
      } else {
        for (const auto& tok : detail_cli::split(grid_text, ','))
          ds.push_back(detail_cli::parse_distortion(tok, "--grid"));
        for (std::size_t i = 1; i < ds.size(); ++i)
          if (!(ds[i - 1] < ds[i]))
            throw std::invalid_argument("field --grid: values must be strictly increasing");
      }
      os << "D,rate,lambda_star,regime\n";
      for (const auto& d : ds) {
        auto ev = rate(p, q, rho, d);
        os << fmt(d.value()) << ',' << fmt(ev.rate) << ','
           << (ev.lambda_star ? fmt(*ev.lambda_star) : std::string()) << ','
           << regime_name(ev.regime) << "\n";
      }
      return 0;
    }

    if (*ball_cmd) {
      std::ifstream file;
      std::istream* qin = &std::cin;
      if (!in_path.empty()) {
        file.open(in_path);
        if (!file) throw std::invalid_argument("field --in: cannot open '" + in_path + "'");
        qin = &file;
      }
      std::map<std::string, LoadedModel> cache;
      std::optional<DistortionMatrix> flag_rho;
      if (!inputs.rho_path.empty()) flag_rho = load_rho_file(inputs.rho_path);
      os << "n,log_prob,l_n,word_rate,finite_flag\n";
      std::string line;
      while (std::getline(*qin, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string word_text, model_ref, d_text;
        if (!(ls >> word_text >> model_ref >> d_text))
          throw std::invalid_argument("ball query line: expected 'word model-file D', got: " + line);
        auto it = cache.find(model_ref);
        if (it == cache.end()) it = cache.emplace(model_ref, load_model_file(model_ref)).first;
        const LoadedModel& lm = it->second;
        DistortionMatrix rho = flag_rho ? *flag_rho
                                        : (lm.rho ? *lm.rho
                                                  : throw std::invalid_argument(
                                                        "field --rho: required, model file '" +
                                                        model_ref + "' embeds no rho"));
        std::vector<int> word;
        for (const auto& tok : detail_cli::split(word_text, ',')) {
          try {
            word.push_back(std::stoi(tok));
          } catch (const std::exception&) {
            throw std::invalid_argument("ball query line: bad symbol '" + tok + "'");
          }
        }
        Rational d = detail_cli::parse_distortion(d_text, "D");
        BallQuery bq{word, lm.model, rho, d, cell_cap, false};
        auto res = exact_ball_log_prob(bq);
        auto wr = word_rate(word, lm.model, rho, d, cell_cap);
        os << word.size() << ',' << fmt_log_prob(res.log_prob) << ',' << fmt(res.l_n) << ','
           << fmt(wr) << ',' << (res.l_n.is_finite() ? 1 : 0) << "\n";
      }
      return 0;
    }

    if (*traj_cmd) {
      auto rho = inputs.resolve_rho();
      Rational d = detail_cli::parse_distortion(distortion_text, "--distortion");
      auto seeds = detail_cli::parse_seeds(seeds_text);
      if (n_max < 1) throw std::invalid_argument("field --n-max: must be >= 1");
      os << "seed,n,l_n,word_rate,cum_rho_q_mean,in_Nm,walk_value\n";
      for (auto seed : seeds) {
        auto recs = run_trajectory(inputs.model->model, inputs.codebook->model, rho, d, n_max,
                                   seed, cell_cap);
        for (const auto& r : recs)
          os << seed << ',' << r.n << ',' << fmt(r.l_n) << ',' << fmt(r.word_rate) << ','
             << fmt(r.cum_rho_q_mean) << ',' << (r.in_nm ? 1 : 0) << ',' << fmt(r.walk_value)
             << "\n";
      }
      return 0;
    }

    if (*path_cmd) {
      auto rho = inputs.resolve_rho();
      Rational d = detail_cli::parse_distortion(distortion_text, "--distortion");
      auto seeds = detail_cli::parse_seeds(seeds_text);
      if (n_max < 1) throw std::invalid_argument("field --n-max: must be >= 1");
      auto v = classify_pathology(inputs.model->model, inputs.codebook->model, rho, d);

      const int window = 50;
      int with_inf = 0, windows_ok = 0, nonempty_nm = 0;
      double max_abs_l_at_nm = 0.0;
      for (auto seed : seeds) {
        auto recs = run_trajectory(inputs.model->model, inputs.codebook->model, rho, d, n_max,
                                   seed, cell_cap);
        bool any_inf = false, all_windows = true;
        int in_window = 0, last_finite = -1;
        double l_at_last_nm = 0.0;
        for (const auto& r : recs) {
          if (r.l_n.is_infinite()) {
            any_inf = true;
          } else {
            ++in_window;
            last_finite = r.n;
            l_at_last_nm = r.l_n.value();
          }
          if (r.n % window == 0) {
            if (in_window == 0) all_windows = false;
            in_window = 0;
          }
        }
        if (any_inf) ++with_inf;
        if (all_windows) ++windows_ok;
        if (last_finite > 0) {
          ++nonempty_nm;
          max_abs_l_at_nm = std::max(max_abs_l_at_nm, std::fabs(l_at_last_nm));
        }
      }

      nlohmann::json j;
      j["verdict"] = {{"pathological", v.pathological},
                      {"d_equals_dmin", v.d_equals_dmin},
                      {"d_positive", v.d_positive},
                      {"dmin_finite", v.dmin_finite},
                      {"rate_finite", v.rate_finite},
                      {"rho_q_constant", v.rho_q_constant}};
      j["ensemble"] = {{"seeds", seeds.size()},
                       {"n_max", n_max},
                       {"window", window},
                       {"seeds_with_some_infinite", with_inf},
                       {"seeds_every_window_has_finite", windows_ok},
                       {"seeds_with_nonempty_nm", nonempty_nm},
                       {"max_abs_l_at_last_nm", max_abs_l_at_nm},
                       {"note", "finite-horizon evidence, not limits"}};
      os << j.dump(2) << "\n";
      return 0;
    }

    if (*rinf_cmd) {
      auto rho = inputs.resolve_rho();
      Rational d = detail_cli::parse_distortion(distortion_text, "--distortion");
      if (n < 1) throw std::invalid_argument("field --n: must be >= 1");
      EvalMode mode;
      if (mode_text == "exact")
        mode = EvalMode::Exact;
      else if (mode_text == "mc")
        mode = EvalMode::MonteCarlo;
      else
        throw std::invalid_argument("field --mode: expected 'exact' or 'mc'");
      auto seeds = detail_cli::parse_seeds(seeds_text);
      McOptions mc{trials, seeds.front()};
      double c = mixing_constant(inputs.codebook->model);
      auto b = r_inf_bounds(inputs.model->model, inputs.codebook->model, rho, d, n, mode, mc);
      os << "n,C,r_n,lower,upper,width,mode,trials,stderr\n";
      os << b.n_used << ',' << fmt(c) << ',' << fmt(b.r_n_value) << ',' << fmt(b.lower) << ','
         << fmt(b.upper) << ',' << fmt(b.width) << ',' << mode_text << ','
         << (mode == EvalMode::MonteCarlo ? trials : 0) << ',' << fmt(b.std_error) << "\n";
      return 0;
    }

    if (*self_cmd) {
      return run_selftest(sink.stream()) ? 0 : 4;
    }
  } catch (const ResourceError& e) {
    err << "resource error: " << e.what() << " (raise AEPLAB_STATE_CAP to override)\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    err << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "validation error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace aeplab::cli
