// Acceptance checks: one PASS/FAIL line per primary criterion.
// Usage: acceptance <path to mixgp_server> [criterion ...]

#include "mixgp/constraints.hpp"
#include "mixgp/evaluation.hpp"
#include "mixgp/experiments.hpp"
#include "mixgp/levelset.hpp"
#include "mixgp/likelihoods.hpp"
#include "mixgp/numerics/sobol.hpp"
#include "mixgp/parallel.hpp"
#include "mixgp/simulators.hpp"
#include "mixgp/svgp.hpp"

#include "httplib.h"
#include "json.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

using namespace mixgp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string g_server;

struct Verdict {
  bool pass = true;
  std::ostringstream note;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::mt19937_64 rng_for(int seed) { return std::mt19937_64(static_cast<std::uint64_t>(seed)); }

Points uniform_points(std::mt19937_64& rng, int n, int d, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Points X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = u(rng);
  return X;
}

Vector gaussian_vector(std::mt19937_64& rng, int n, double sd) {
  std::normal_distribution<double> g(0.0, sd);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

// ------------------------------------------------------------------ criteria

void figure2(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const Figure2Result r = run_figure2(Figure2Config{});
  const double dt = seconds_since(t0);
  for (int i = 0; i < 2; ++i) {
    v.require(r.mixed_sd_at[i] < 0.1, "mixed sd < 0.1");
    v.require(r.mixed_error_at[i] < 0.1, "|mu - target| < 0.1");
  }
  v.require(r.unconstrained_sd_at[1] > 3.0 * r.mixed_sd_at[1], "unconstrained sd at 2 > 3x mixed");
  v.require(dt < 60.0, "runtime < 1 min");
  v.note << "mixed sd " << r.mixed_sd_at[0] << ", " << r.mixed_sd_at[1] << "; |err| " << r.mixed_error_at[0] << ", "
         << r.mixed_error_at[1] << "; unconstrained sd at 2 " << r.unconstrained_sd_at[1] << "; " << dt << " s";
}

void constraint_noise_numbers(Verdict& v) {
  v.require(constraint_noise(0.0) == 0.1, "sigma(0) = 0.1");
  v.require(constraint_noise(2.0) == 0.5, "sigma(2) = 0.5");
  const auto [a0, b0] = response_probability_interval(0.0, constraint_noise(0.0));
  const auto [a2, b2] = response_probability_interval(2.0, constraint_noise(2.0));
  v.require(std::abs(a0 - 0.422) <= 1e-3 && std::abs(b0 - 0.578) <= 1e-3, "interval at y = 0");
  v.require(std::abs(a2 - 0.846) <= 1e-3 && std::abs(b2 - 0.999) <= 1e-3, "interval at y = 2");
  v.note << "[" << a0 << ", " << b0 << "] and [" << a2 << ", " << b2 << "]";
}

void figure3(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::string> objectives = {"normball-2d", "discrimination"};
  const std::vector<ModelVariant> variants = {ModelVariant::mixed, ModelVariant::pseudo, ModelVariant::unconstrained};
  constexpr int seeds = 10;
  std::vector<double> f1(objectives.size() * variants.size() * seeds);
  const int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  parallel_for(f1.size(), workers, [&](std::size_t job) {
    const std::size_t o = job / (variants.size() * seeds), k = (job / seeds) % variants.size(), s = job % seeds;
    ActiveLearningConfig c;
    c.objective = objectives[o];
    c.model.variant = variants[k];
    c.budget = 50;
    c.seed = s;
    c.num_reference = 1000;
    c.metric_samples = 1024;
    c.final_metric_samples = 1 << 16;
    f1[job] = run_active_learning(c).final_f1;
    std::cerr << "  figure 3: " << objectives[o] << ' ' << to_string(variants[k]) << " seed " << s << " F1 "
              << f1[job] << '\n';
  });
  for (std::size_t o = 0; o < objectives.size(); ++o) {
    double m[3];
    for (std::size_t k = 0; k < 3; ++k) {
      m[k] = 0.0;
      for (int s = 0; s < seeds; ++s) m[k] += f1[(o * 3 + k) * seeds + s] / seeds;
    }
    v.require(m[0] > m[1] && m[1] > m[2], objectives[o] + " ordering");
    v.note << objectives[o] << " F1 mixed " << m[0] << " > pseudo " << m[1] << " > unconstrained " << m[2] << "; ";
  }
  const double dt = seconds_since(t0);
  v.require(dt < 1800.0, "runtime < 30 min");
  v.note << dt << " s";
}

void figure4(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  int wins = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Figure4Config c;
    c.seed = s;
    const Figure4Result r = run_figure4(c);
    wins += r.mse_mixed < r.mse_choice_only;
    std::cerr << "  figure 4: seed " << s << " MSE mixed " << r.mse_mixed << " choice-only " << r.mse_choice_only << '\n';
  }
  const double dt = seconds_since(t0);
  v.require(wins >= 15, "mixed wins >= 15/20");
  v.require(dt < 600.0, "runtime < 10 min");
  v.note << "mixed lower MSE in " << wins << "/20 seeds; " << dt << " s";
}

void oracle_equivalence(Verdict& v) {
  double worst_mean = 0.0, worst_var = 0.0, worst_gap = -1e300;
  for (int inst = 0; inst < 10; ++inst) {
    auto rng = rng_for(100 + inst);
    const int n = 12 + inst;
    const Points X = uniform_points(rng, n, 1 + inst % 2, -2, 2);
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = std::sin(2 * X(i, 0)) + X.row(i).sum() * 0.3;
    y += gaussian_vector(rng, n, 0.1);
    const Vector sd = Vector::Constant(n, 0.2 + 0.02 * inst);
    const int d = static_cast<int>(X.cols());
    VariationalGP model({KernelKind::rbf, d}, KernelParams::isotropic(d, 0.5 + 0.05 * inst, 1.0 + 0.1 * inst), X);
    const ObservationBlock blocks[] = {ObservationBlock::gaussian(X, y, sd)};
    FitOptions opts;
    opts.iterations = 3000;
    opts.trainable.kernel = false;
    const FitResult res = fit(model, blocks, HyperPriors::none(), opts);
    const Points Xs = uniform_points(rng, 40, d, -2, 2);
    const ExactPosterior ex = exact_gp_posterior(X, y, sd, model.covariance(), Xs);
    const Marginals mg = latent_marginals(model, Xs);
    worst_mean = std::max(worst_mean, (mg.mean - ex.mean).cwiseAbs().maxCoeff());
    worst_var = std::max(worst_var, (mg.var - ex.cov.diagonal()).cwiseAbs().maxCoeff());
    const double lml = exact_gp_posterior(X, y, sd, model.covariance(), X).log_marginal_likelihood;
    worst_gap = std::max(worst_gap, res.final_elbo - lml);
  }
  v.require(worst_mean < 1e-3, "mean within 1e-3");
  v.require(worst_var < 5e-3, "variance within 5e-3");
  v.require(worst_gap <= 1e-9, "ELBO <= log marginal likelihood");
  v.note << "10 instances: max |dmean| " << worst_mean << ", max |dvar| " << worst_var << ", max ELBO - LML "
         << worst_gap;
}

void likelihood_suite(Verdict& v) {
  auto rng = rng_for(5);
  double worst_sum = 0.0, worst_jump = 0.0, max_gap = 0.0;
  bool floor_ok = true;
  for (int trial = 0; trial < 500; ++trial) {
    const int l = 2 + trial % 8;
    const double lapse = 0.05 * (trial % 5);
    const auto lik = LikertLikelihood::from_raw(gaussian_vector(rng, l - 1, 5.0), lapse);
    const Vector cuts = lik.cut_points();
    for (int i = 0; i + 1 < l; ++i) max_gap = std::max(max_gap, cuts[i + 1] - cuts[i]);
    std::uniform_real_distribution<double> u(0.0, cuts[l - 1] + 3.0);
    for (int k = 0; k < 10; ++k) {
      const Vector p = lik.probs(u(rng));
      worst_sum = std::max(worst_sum, std::abs(p.sum() - 1.0));
      floor_ok = floor_ok && p.minCoeff() >= lapse / l - 1e-15;
    }
    for (int i = 1; i < l; ++i)
      worst_jump = std::max(worst_jump, (lik.probs(cuts[i] - 1e-9) - lik.probs(cuts[i] + 1e-9)).cwiseAbs().maxCoeff());
  }
  const int table[] = {0, 0, 0, 1, 1, 1, 2, 2, 2};
  bool map_ok = true;
  for (int r = 1; r <= 9; ++r) map_ok = map_ok && map_raw_likert(r) == table[r - 1];
  v.require(worst_sum <= 1e-12, "sum to 1");
  v.require(floor_ok, "lapse floor");
  v.require(worst_jump < 1e-6, "continuity at cut points");
  v.require(max_gap <= 2.0, "cut gaps <= 2");
  v.require(map_ok, "raw rating map");
  v.note << "500 likelihoods: max |sum - 1| " << worst_sum << ", max jump " << worst_jump << ", max gap " << max_gap
         << ", raw map " << (map_ok ? "exact" : "wrong");
}

double layout_gradient_error(const VariationalGP& model, std::span<const ObservationBlock> blocks) {
  const GaussHermite gh(20);
  const ParameterLayout layout(model, TrainableSet{});
  ElboGradient grad;
  elbo_terms(model, blocks, HyperPriors{}, gh, &grad);
  const Vector analytic = layout.pack_gradient(model, grad);
  const Vector theta = layout.pack(model);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Vector tp = theta, tm = theta;
    const double h = 1e-5;
    tp[i] += h;
    tm[i] -= h;
    VariationalGP a = model, b = model;
    layout.unpack(tp, a);
    layout.unpack(tm, b);
    const double fd = (elbo(a, blocks, HyperPriors{}, gh) - elbo(b, blocks, HyperPriors{}, gh)) / (2 * h);
    worst = std::max(worst, std::abs(analytic[i] - fd) / std::max({std::abs(analytic[i]), std::abs(fd), 1e-4}));
  }
  return worst;
}

VariationalGP randomize_variational(std::mt19937_64& rng, VariationalGP model) {
  const int m = static_cast<int>(model.num_inducing());
  model.m_white = gaussian_vector(rng, m, 0.7);
  Matrix L = gaussian_vector(rng, m * m, 0.2).reshaped(m, m);
  L = L.triangularView<Eigen::Lower>();
  L.diagonal() = (gaussian_vector(rng, m, 0.3).array().exp() * 0.8).matrix();
  model.L_white = L;
  model.likert = LikertLikelihood::from_raw(gaussian_vector(rng, 2, 0.5));
  return model;
}

void gradient_suite(Verdict& v) {
  double worst = 0.0;
  for (int inst = 0; inst < 4; ++inst) {
    auto rng = rng_for(40 + inst);
    const bool pair = inst % 2 == 1;
    const int d = pair ? 2 : 2;
    VariationalGP model = pair ? VariationalGP({KernelKind::preference, 1}, KernelParams(Vector{{0.7}}, 1.3),
                                               uniform_points(rng, 5, 2, -1, 1))
                               : VariationalGP({KernelKind::rbf, 2}, KernelParams(Vector{{0.5, 0.8}}, 1.6),
                                               uniform_points(rng, 5, 2, -1, 1), MeanMode::learned_constant, 0.2);
    model = randomize_variational(rng, model);
    const Points X = uniform_points(rng, 8, d, -1, 1);
    const ObservationBlock blocks[] = {
        ObservationBlock::gaussian(X.topRows(4), gaussian_vector(rng, 4, 1.0), Vector::Constant(4, 0.4)),
        ObservationBlock::bernoulli(X, Vector{{1, 0, 1, 1, 0, 0, 1, 0}}),
        ObservationBlock::likert(X, Vector{{0, 1, 2, 2, 1, 0, 2, 1}}),
    };
    worst = std::max(worst, layout_gradient_error(model, blocks));
  }
  v.require(worst < 1e-4, "relative error < 1e-4");
  v.note << "4 models with 5 inducing points and three likelihoods: max relative error " << worst;
}

void martingale(Verdict& v) {
  auto rng = rng_for(77);
  std::uniform_real_distribution<double> u(0.2, 0.8);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 3, m = 10;
    VariationalGP model({KernelKind::rbf, d},
                        KernelParams(Vector::NullaryExpr(d, [&](Eigen::Index) { return u(rng); }), 1.0 + 2.0 * u(rng)),
                        uniform_points(rng, m, d, -1, 1), MeanMode::learned_constant, gaussian_vector(rng, 1, 1.0)[0]);
    model.m_white = gaussian_vector(rng, m, 1.0);
    Matrix L = gaussian_vector(rng, m * m, 0.15).reshaped(m, m);
    L = L.triangularView<Eigen::Lower>();
    L.diagonal() = Vector::NullaryExpr(m, [&](Eigen::Index) { return 0.3 + 0.6 * u(rng); });
    model.L_white = L;
    const Posterior post(model);
    const LevelSetProblem prob = LevelSetProblem::make(Box::uniform(d, -1, 1), 0.5, 128);
    const LookaheadContext ctx(post, prob);
    const auto out = ctx.lookahead(uniform_points(rng, 1, d, -1, 1).row(0).transpose());
    const Vector avg = out[0].prob * out[0].mean + out[1].prob * out[1].mean;
    worst = std::max(worst, (avg - ctx.reference_mean()).cwiseAbs().maxCoeff());
  }
  v.require(worst < 1e-8, "within 1e-8");
  v.note << "100 models: max |E_y[mean'] - mean| " << worst;
}

void metric_oracles(Verdict& v) {
  const Objective o = make_objective("normball-2d");
  const double r = default_latent_threshold() / 2.0;
  const double analytic = 2 * 0.81 / 1.81;
  const F1Score s = f1_levelset([&](const Vector& x) { return x.norm() <= 0.9 * r; },
                                [&](const Vector& x) { return o.in_truth_sublevel(x); }, o.domain, 1 << 20, 1);
  v.require(std::abs(s.f1 - analytic) < 0.005, "F1 within 0.005 of 0.8950");
  const double b = brier(Vector{{0.9, 0.2, 0.6, 0.5}}, Vector{{1, 0, 0, 1}});
  const double hand = (0.01 + 0.04 + 0.36 + 0.25) / 4.0;
  v.require(b == hand, "Brier equals hand arithmetic");
  const Objective e = make_objective("ellipsoid");
  const Points S = sobol(1 << 20, e.domain, SobolOptions{true, 3, 0});
  long inside = 0;
  for (Eigen::Index i = 0; i < S.rows(); ++i) inside += e.in_truth_sublevel(S.row(i).transpose());
  const double frac = static_cast<double>(inside) / static_cast<double>(S.rows());
  v.require(frac >= 0.015 && frac <= 0.025, "ellipsoid volume in [1.5%, 2.5%]");
  v.note << "F1 " << s.f1 << " (analytic " << analytic << "); Brier " << b << " = " << hand << "; ellipsoid volume "
         << 100 * frac << "%";
}

// ------------------------------------------------------------------ service

struct ServerProcess {
  pid_t pid = -1;
  int port = 0;

  void start(const fs::path& data_dir) {
    int fds[2];
    if (::pipe(fds) != 0) throw std::runtime_error("pipe failed");
    pid = ::fork();
    if (pid == 0) {
      ::dup2(fds[1], STDOUT_FILENO);
      ::close(fds[0]);
      ::close(fds[1]);
      const std::string dir = data_dir.string();
      ::execl(g_server.c_str(), g_server.c_str(), "--bind", "127.0.0.1:0", "--data-dir", dir.c_str(), "--workers",
              "2", static_cast<char*>(nullptr));
      std::_Exit(127);
    }
    ::close(fds[1]);
    FILE* out = ::fdopen(fds[0], "r");
    char line[512] = {};
    if (!std::fgets(line, sizeof line, out)) throw std::runtime_error("server did not start");
    std::fclose(out);
    const std::string s(line);
    const auto colon = s.find(':', s.find("listening on"));
    port = std::stoi(s.substr(colon + 1));
  }
  void kill_hard() {
    if (pid > 0) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, nullptr, 0);
      pid = -1;
    }
  }
  void stop() {
    if (pid > 0) {
      ::kill(pid, SIGTERM);
      ::waitpid(pid, nullptr, 0);
      pid = -1;
    }
  }
  ~ServerProcess() { kill_hard(); }

  json call(const std::string& method, const std::string& path, const json& body = nullptr, int* status = nullptr) {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(300, 0);
    auto r = method == "GET" ? c.Get(path) : c.Post(path, body.dump(), "application/json");
    if (!r) throw std::runtime_error(method + " " + path + ": no response");
    if (status) *status = r->status;
    return json::parse(r->body);
  }
};

int answer(const json& trial) {
  static const BernoulliResponder responder{make_objective("normball-2d"), CounterRng(11, 9)};
  Vector x(trial["x"].size());
  for (std::size_t i = 0; i < trial["x"].size(); ++i) x[static_cast<Eigen::Index>(i)] = trial["x"][i].get<double>();
  return responder.respond(x, trial["id"].get<std::uint64_t>());
}

void service_durability(Verdict& v) {
  const fs::path root = fs::temp_directory_path() / ("mixgp_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const json config = {{"kind", "levelset"}, {"objective", "normball-2d"}, {"constraints", "objective"},
                       {"budget", 30},       {"seed", 11},                {"model", {{"refit_iterations", 200}}}};

  ServerProcess live, reference;
  live.start(root / "live");
  reference.start(root / "reference");
  const std::string a = live.call("POST", "/sessions", config)["session"];
  const std::string b = reference.call("POST", "/sessions", config)["session"];

  int mismatches = 0, lost = 0, steps = 0;
  json next_live = live.call("GET", "/sessions/" + a + "/trial")["trial"];
  json next_ref = reference.call("GET", "/sessions/" + b + "/trial")["trial"];
  while (!next_ref.is_null()) {
    mismatches += next_live != next_ref;
    const json resp = {{"trial", next_ref["id"]}, {"choice", answer(next_ref)}};
    next_ref = reference.call("POST", "/sessions/" + b + "/responses", resp)["trial"];
    next_live = live.call("POST", "/sessions/" + a + "/responses", resp)["trial"];
    ++steps;
    if (steps == 15) {
      live.kill_hard();
      live.start(root / "live");
      const json after = live.call("GET", "/sessions/" + a + "/trial");
      lost += 15 - after["responses"].get<int>();
      mismatches += after["trial"] != next_live;
      next_live = after["trial"];
    }
  }
  const json exp_live = live.call("GET", "/sessions/" + a + "/export");
  const json exp_ref = reference.call("GET", "/sessions/" + b + "/export");
  const json grid_live = live.call("GET", "/sessions/" + a + "/model?grid=32")["grid"]["values"];
  const json grid_ref = reference.call("GET", "/sessions/" + b + "/model?grid=32")["grid"]["values"];
  double max_diff = 0.0;
  for (std::size_t i = 0; i < grid_ref.size(); ++i)
    max_diff = std::max(max_diff, std::abs(grid_live[i].get<double>() - grid_ref[i].get<double>()));
  lost += static_cast<int>(exp_ref["trials"].size() - exp_live["trials"].size());
  v.require(mismatches == 0, "identical proposals after restart");
  v.require(lost == 0, "no lost responses across the restart");
  v.require(max_diff <= 1e-9, "resumed posterior within 1e-9");
  v.note << "killed after 15 of 30 responses: " << mismatches << " proposal mismatches, " << lost
         << " lost, max posterior difference " << max_diff << "; ";
  reference.stop();

  json autopilot = config;
  autopilot["autopilot"] = true;
  autopilot["seed"] = 12;
  const std::string c = live.call("POST", "/sessions", autopilot)["session"];
  const auto t0 = std::chrono::steady_clock::now();
  json view;
  do {
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    view = live.call("GET", "/sessions/" + c + "/trial");
  } while (view["status"] != "completed" && seconds_since(t0) < 900);
  const json exp = live.call("GET", "/sessions/" + c + "/export");
  std::set<int> ids;
  for (const auto& t : exp["trials"]) ids.insert(t["trial"].get<int>());
  int decreases = 0;
  for (const auto& tr : exp["fit_traces"])
    for (std::size_t i = 1; i < tr.size(); ++i) decreases += tr[i].get<double>() < tr[i - 1].get<double>();
  std::ifstream log(root / "live" / c / "log.jsonl");
  int logged = 0;
  for (std::string line; std::getline(log, line);) logged += !line.empty();
  v.require(view["status"] == "completed", "autopilot completes");
  v.require(ids.size() == 30 && *ids.begin() == 1 && *ids.rbegin() == 30 && logged == 30, "30 responses, none lost");
  v.require(exp["fit_traces"].size() == 30 && decreases == 0, "monotone ELBO traces");
  v.note << "autopilot: " << exp["trials"].size() << " responses, " << logged << " logged, " << exp["fit_traces"].size()
         << " refits, " << decreases << " ELBO decreases, " << seconds_since(t0) << " s";
  live.stop();
  fs::remove_all(root);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <mixgp_server> [criterion ...]\n";
    return 2;
  }
  g_server = argv[1];
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
      {"figure2", figure2},
      {"constraint-noise", constraint_noise_numbers},
      {"figure3", figure3},
      {"figure4", figure4},
      {"oracle-equivalence", oracle_equivalence},
      {"likelihood-suite", likelihood_suite},
      {"gradient-suite", gradient_suite},
      {"martingale", martingale},
      {"metric-oracles", metric_oracles},
      {"service-durability", service_durability},
  };
  std::set<std::string> only(argv + 2, argv + argc);
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    Verdict v;
    try {
      run(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.note << " [exception: " << e.what() << "]";
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.note.str() << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
