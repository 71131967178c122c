// End-to-end acceptance suite. Runs every gate at its stated tolerance and
// prints one pass/fail line per criterion; exits nonzero on any failure.
//
// The desk benchmark behind the training criteria: 20,000 synthetic rows,
// 10% positive, class separation 3.5 in 10 dimensions, a 5x32 relu
// extractor against a 3-layer predictor, batch 128, Adam 1e-3, 16 epochs,
// evaluation every 400 steps.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "splitsim/config.hpp"
#include "splitsim/dcor.hpp"
#include "splitsim/defenses.hpp"
#include "splitsim/errors.hpp"
#include "splitsim/experiment.hpp"
#include "splitsim/numerics.hpp"
#include "splitsim/protocol.hpp"
#include "test_support.hpp"

using namespace splitsim;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kSeeds[] = {1, 2, 3, 4, 5};
constexpr double kSweepFloor = 0.01;  // release valve for the alpha sweep

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct CriterionResult {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

ExperimentConfig desk_benchmark(uint64_t seed) {
  ExperimentConfig config;
  SyntheticSpec spec;
  spec.n = 20000;
  spec.positive_ratio = 0.1;
  spec.dim = 10;
  spec.class_separation = 3.5;
  spec.noise_sigma = 1.0;
  spec.seed = seed;
  config.data.synthetic = spec;
  config.model.f_widths = {32, 32, 32, 32, 32};
  config.model.h_widths = {32, 32};
  config.train.batch_size = 128;
  config.train.lr = 1e-3;
  config.train.epochs = 16;
  config.train.seed = seed;
  config.attack.eval_every = 400;
  return config;
}

ExperimentConfig balanced_benchmark(uint64_t seed) {
  ExperimentConfig config = desk_benchmark(seed);
  config.data.synthetic->positive_ratio = 0.5;
  config.data.synthetic->class_separation = 8.0;
  config.data.synthetic->positive_signal_fraction = 0.65;
  config.attack.rule = AssignmentRule::by_score;
  return config;
}

double final_cut_leak(const RunResult& run) {
  const auto leak = run.final_record().cut_spectral_leak();
  return leak ? *leak : 0.5;
}

double final_layer1_leak(const RunResult& run) {
  const auto& leaks = run.final_record().spectral_leak;
  return leaks.front() ? *leaks.front() : 0.5;
}

// Mean norm-attack leak over the converged (second) half of the
// evaluation records.
double norm_leak_late_mean(const RunResult& run) {
  const auto& records = run.records;
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = records.size() / 2; i < records.size(); ++i) {
    if (records[i].norm_leak) {
      acc += *records[i].norm_leak;
      ++count;
    }
  }
  return count ? acc / static_cast<double>(count) : 0.5;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      double less = 0.0, equal = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        less += (v[j] < v[i]);
        equal += (v[j] == v[i]);
      }
      r[i] = less + 0.5 * (equal - 1.0);
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx == 0.0 || vy == 0.0) return 0.0;
  return cov / std::sqrt(vx * vy);
}

class AcceptanceSuite {
 public:
  AcceptanceSuite(std::string cli_path, std::string workdir)
      : cli_path_(std::move(cli_path)), workdir_(std::move(workdir)) {}

  int run_all() {
    criterion(1, "dcor oracle equivalence", [this] { return dcor_oracle(); });
    criterion(2, "gradient correctness", [this] { return gradient_correctness(); });
    criterion(3, "split/monolithic equivalence", [this] { return split_monolithic(); });
    criterion(4, "auc exactness", [this] { return auc_exactness(); });
    criterion(5, "spectral separation bound", [this] { return separation_bound(); });
    criterion(6, "attack effectiveness without defense", [this] { return attack_effectiveness(); });
    criterion(7, "gradient-side defenses leave the forward attack", [this] { return gradient_side_defenses(); });
    criterion(8, "dcor defense trade-off", [this] { return dcor_defense(); });
    criterion(9, "leak bounded by test auc", [this] { return leak_bounded(); });
    criterion(10, "cost of privacy", [this] { return cost_of_privacy(); });
    criterion(11, "balanced-data attack and defense", [this] { return balanced_data(); });
    criterion(12, "deterministic metrics files", [this] { return determinism(); });
    criterion(13, "information-flow audit", [this] { return audit_clean(); });

    std::size_t failed = 0;
    for (const auto& r : results_) failed += !r.pass;
    std::cout << "\n" << (results_.size() - failed) << "/" << results_.size()
              << " criteria passed\n";
    return failed == 0 ? 0 : 1;
  }

 private:
  template <typename Fn>
  void criterion(int id, const std::string& name, Fn&& fn) {
    const auto start = Clock::now();
    CriterionResult result{id, name, false, ""};
    try {
      auto [pass, detail] = fn();
      result.pass = pass;
      result.detail = detail;
    } catch (const std::exception& e) {
      result.pass = false;
      result.detail = std::string("exception: ") + e.what();
    }
    std::cout << (result.pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << name
              << " (" << result.detail << ") [" << std::fixed << std::setprecision(1)
              << seconds_since(start) << "s]\n"
              << std::defaultfloat;
    std::cout.flush();
    results_.push_back(std::move(result));
  }

  const RunResult& cached_run(const std::string& key, const ExperimentConfig& config) {
    auto it = run_cache_.find(key);
    if (it != run_cache_.end()) return it->second;
    RunResult run = run_experiment(config, nullptr, std::nullopt);
    audit_records_ += run.audit_records;
    audit_violations_ += run.audit_violations;
    auto [pos, inserted] = run_cache_.emplace(key, std::move(run));
    return pos->second;
  }

  const RunResult& vanilla_run(int seed) {
    return cached_run("vanilla/" + std::to_string(seed), desk_benchmark(seed));
  }

  // ---- criterion 1 -------------------------------------------------------
  std::pair<bool, std::string> dcor_oracle() {
    const auto start = Clock::now();
    Rng rng(20240601);
    double max_diff = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + rng.uniform_index(63);
      const std::size_t d = 1 + rng.uniform_index(8);
      const Matrix x = testsupport::random_matrix(rng, n, d, -2.0, 2.0);
      const auto labels = testsupport::random_binary_labels(rng, n, 0.4);
      const auto mine = distance_correlation(x, labels);
      const auto oracle = testsupport::brute_force_dcor(x, labels);
      max_diff = std::max(max_diff, std::abs(mine.dcor - oracle.dcor));
    }
    const double elapsed = seconds_since(start);
    std::ostringstream detail;
    detail << "max |diff| = " << max_diff << " over 100 instances, " << elapsed << "s";
    return {max_diff <= 1e-10 && elapsed < 10.0, detail.str()};
  }

  // ---- criterion 2 -------------------------------------------------------
  std::pair<bool, std::string> gradient_correctness() {
    const auto start = Clock::now();
    double worst = 0.0;

    // (a) every parameter of a composite net under BCE.
    for (int instance = 0; instance < 3; ++instance) {
      Rng rng(900 + instance);
      MlpStack net = make_mlp(5, std::vector<std::size_t>{7, 5, 1}, Activation::relu,
                              Activation::identity, rng);
      const Matrix input = testsupport::random_matrix(rng, 12, 5, 0.0, 1.0);
      const auto labels = testsupport::random_binary_labels(rng, 12, 0.4);

      auto loss_of = [&](MlpStack& stack) {
        const Matrix& out = forward(stack, input);
        std::vector<double> logits(out.rows());
        for (std::size_t i = 0; i < out.rows(); ++i) logits[i] = out(i, 0);
        return bce_with_logits(logits, labels).loss;
      };

      const Matrix& out = forward(net, input);
      std::vector<double> logits(out.rows());
      for (std::size_t i = 0; i < out.rows(); ++i) logits[i] = out(i, 0);
      const BceResult bce = bce_with_logits(logits, labels);
      Matrix grad_out(out.rows(), 1);
      for (std::size_t i = 0; i < out.rows(); ++i) grad_out(i, 0) = bce.grad_logits[i];
      const auto [grads, grad_input] = backward(net, grad_out);

      for (std::size_t li = 0; li < net.layers.size(); ++li) {
        auto probe_tensor = [&](std::vector<double>& tensor, const std::vector<double>& grad) {
          for (std::size_t idx = 0; idx < tensor.size(); ++idx) {
            const double saved = tensor[idx];
            tensor[idx] = saved + 1e-5;
            const double up = loss_of(net);
            tensor[idx] = saved - 1e-5;
            const double down = loss_of(net);
            tensor[idx] = saved;
            worst = std::max(worst, testsupport::rel_err(grad[idx], (up - down) / 2e-5));
          }
        };
        probe_tensor(net.layers[li].weight.data(), grads.weight[li].data());
        probe_tensor(net.layers[li].bias, grads.bias[li]);
      }
    }

    // (b) the dcor loss gradient.
    {
      Rng rng(77);
      Matrix x = testsupport::random_matrix(rng, 14, 3, -1.0, 1.0);
      const auto labels = testsupport::random_binary_labels(rng, 14, 0.5);
      const Matrix grad = dcor_loss_gradient(x, labels, 1e-8);
      for (std::size_t idx = 0; idx < x.data().size(); ++idx) {
        const double saved = x.data()[idx];
        x.data()[idx] = saved + 1e-5;
        const double up = dcor_loss(x, labels, 1e-8);
        x.data()[idx] = saved - 1e-5;
        const double down = dcor_loss(x, labels, 1e-8);
        x.data()[idx] = saved;
        worst = std::max(worst, testsupport::rel_err(grad.data()[idx], (up - down) / 2e-5));
      }
    }

    // (c) the combined label-party objective w.r.t. the embedding.
    {
      Rng rng(78);
      MlpStack h = make_mlp(4, std::vector<std::size_t>{5, 1}, Activation::relu,
                            Activation::identity, rng);
      Matrix embedding = testsupport::random_matrix(rng, 10, 4, 0.1, 0.9);
      const auto labels = testsupport::random_binary_labels(rng, 10, 0.5);
      DefenseConfig cfg;
      cfg.alpha_d = 0.01;
      Rng noise(1);
      MlpStack h_run = h;
      const auto combined = combined_label_party_gradient(embedding, labels, h_run, cfg, noise);

      auto objective = [&](const Matrix& e) {
        MlpStack hc = h;
        const Matrix& out = forward(hc, e);
        std::vector<double> logits(out.rows());
        for (std::size_t i = 0; i < out.rows(); ++i) logits[i] = out(i, 0);
        return bce_with_logits(logits, labels).loss + cfg.alpha_d * dcor_loss(e, labels, cfg.dcor_floor);
      };
      for (std::size_t idx = 0; idx < embedding.data().size(); ++idx) {
        const double saved = embedding.data()[idx];
        embedding.data()[idx] = saved + 1e-5;
        const double up = objective(embedding);
        embedding.data()[idx] = saved - 1e-5;
        const double down = objective(embedding);
        embedding.data()[idx] = saved;
        worst = std::max(worst,
                         testsupport::rel_err(combined.payload.data()[idx], (up - down) / 2e-5));
      }
    }

    const double elapsed = seconds_since(start);
    std::ostringstream detail;
    detail << "max rel err = " << worst << ", " << elapsed << "s";
    return {worst < 1e-4 && elapsed < 60.0, detail.str()};
  }

  // ---- criterion 3 -------------------------------------------------------
  std::pair<bool, std::string> split_monolithic() {
    Rng meta(52);
    double worst = 0.0;
    for (int instance = 0; instance < 20; ++instance) {
      const uint64_t seed = 3000 + instance;
      const std::size_t in_dim = 2 + meta.uniform_index(4);
      const std::size_t w1 = 2 + meta.uniform_index(5);
      const std::size_t w2 = 2 + meta.uniform_index(5);
      const std::size_t hw = 2 + meta.uniform_index(4);

      Rng nl_init(derive_seed(seed, 1)), lp_init(derive_seed(seed, 2));
      MlpStack f = make_mlp(in_dim, std::vector<std::size_t>{w1, w2}, Activation::relu,
                            Activation::relu, nl_init);
      MlpStack h = make_mlp(w2, std::vector<std::size_t>{hw, 1}, Activation::relu,
                            Activation::identity, lp_init);
      Rng nl_init2(derive_seed(seed, 1)), lp_init2(derive_seed(seed, 2));
      MlpStack mono = make_mlp(in_dim, std::vector<std::size_t>{w1, w2}, Activation::relu,
                               Activation::relu, nl_init2);
      add_layer(mono, w2, hw, Activation::relu, lp_init2);
      add_layer(mono, hw, 1, Activation::identity, lp_init2);

      Rng data_rng(seed + 5);
      const std::size_t n = 6;
      const Matrix input = testsupport::random_matrix(data_rng, n, in_dim, 0.0, 1.0);
      const auto labels = testsupport::random_binary_labels(data_rng, n, 0.5);

      const Matrix& cut = forward(f, input);
      const Matrix& logits = forward(h, cut);
      std::vector<double> col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = logits(i, 0);
      const BceResult bce = bce_with_logits(col, labels);
      Matrix grad_logits(n, 1);
      for (std::size_t i = 0; i < n; ++i) grad_logits(i, 0) = bce.grad_logits[i];
      auto [h_grads, g_cut] = backward(h, grad_logits);
      auto [f_grads, g_in] = backward(f, g_cut);

      const Matrix& mono_out = forward(mono, input);
      std::vector<double> mono_col(n);
      for (std::size_t i = 0; i < n; ++i) mono_col[i] = mono_out(i, 0);
      const BceResult mono_bce = bce_with_logits(mono_col, labels);
      Matrix mono_grad(n, 1);
      for (std::size_t i = 0; i < n; ++i) mono_grad(i, 0) = mono_bce.grad_logits[i];
      auto [mono_grads, mono_gin] = backward(mono, mono_grad);

      const std::size_t f_layers = f.layers.size();
      for (std::size_t li = 0; li < mono.layers.size(); ++li) {
        const Matrix& expect =
            li < f_layers ? f_grads.weight[li] : h_grads.weight[li - f_layers];
        const auto& expect_bias =
            li < f_layers ? f_grads.bias[li] : h_grads.bias[li - f_layers];
        for (std::size_t k = 0; k < expect.data().size(); ++k) {
          worst = std::max(worst, std::abs(mono_grads.weight[li].data()[k] - expect.data()[k]));
        }
        for (std::size_t k = 0; k < expect_bias.size(); ++k) {
          worst = std::max(worst, std::abs(mono_grads.bias[li][k] - expect_bias[k]));
        }
      }
    }
    std::ostringstream detail;
    detail << "max |grad diff| = " << worst << " over 20 instances";
    return {worst <= 1e-10, detail.str()};
  }

  // ---- criterion 4 -------------------------------------------------------
  std::pair<bool, std::string> auc_exactness() {
    Rng rng(424242);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t n = 2 + rng.uniform_index(511);
      const int levels = 1 + static_cast<int>(rng.uniform_index(40));
      std::vector<double> scores(n);
      for (double& s : scores) s = static_cast<double>(rng.uniform_index(levels)) / levels;
      const auto labels = testsupport::random_binary_labels(rng, n, 0.3);
      if (auc(scores, labels) != testsupport::pair_count_auc(scores, labels)) ++mismatches;
    }
    std::ostringstream detail;
    detail << mismatches << " mismatches in 1000 vectors";
    return {mismatches == 0, detail.str()};
  }

  // ---- criterion 5 -------------------------------------------------------
  std::pair<bool, std::string> separation_bound() {
    const auto start = Clock::now();
    const double eps_grid[] = {0.05, 0.1, 0.2};
    const std::size_t d_grid[] = {2, 8, 32};
    Rng meta(616);
    std::size_t passes = 0;
    const std::size_t trials = 100;
    for (std::size_t trial = 0; trial < trials; ++trial) {
      const double eps = eps_grid[trial % 3];
      const std::size_t d = d_grid[(trial / 3) % 3];

      MixtureSpec spec;
      spec.epsilon_mix = eps;
      spec.sigma2 = 1.0;
      spec.n = 2000;
      spec.mu_d.assign(d, 0.0);
      spec.mu_w.assign(d, 0.0);
      spec.var_d.resize(d);
      spec.var_w.resize(d);
      for (std::size_t j = 0; j < d; ++j) {
        spec.var_d[j] = meta.uniform_in(0.3, 1.0);
        spec.var_w[j] = meta.uniform_in(0.3, 1.0);
      }
      std::vector<double> dir(d);
      double norm = 0.0;
      for (double& v : dir) v = meta.normal();
      for (double v : dir) norm += v * v;
      norm = std::sqrt(norm);
      const double margin = meta.uniform_in(1.0, 2.0);
      const double dist = std::sqrt(margin * 6.0 * spec.sigma2 / eps);
      for (std::size_t j = 0; j < d; ++j) spec.mu_w[j] = dist * dir[j] / norm;
      if (!spec.separation_holds()) continue;

      Rng sample_rng(7000 + trial);
      const MixtureSample sample = sample_mixture(spec, sample_rng);
      const SpectralAttackResult res =
          spectral_attack(sample.points, AttackPrior{AssignmentRule::by_size, std::nullopt});
      if (!res.score_boundary) continue;
      const double boundary = *res.score_boundary;
      std::size_t nd = 0, nw = 0, d_above = 0, w_below = 0;
      for (std::size_t i = 0; i < sample.component.size(); ++i) {
        if (sample.component[i] == 0) {
          ++nd;
          d_above += res.scores[i] > boundary;
        } else {
          ++nw;
          w_below += res.scores[i] < boundary;
        }
      }
      const double frac_d = nd ? static_cast<double>(d_above) / nd : 0.0;
      const double frac_w = nw ? static_cast<double>(w_below) / nw : 0.0;
      passes += (frac_d < 1.5 * eps && frac_w < 1.5 * eps);
    }
    const double elapsed = seconds_since(start);
    std::ostringstream detail;
    detail << passes << "/" << trials << " trials within 1.5x bound, " << elapsed << "s";
    return {passes * 100 >= trials * 95 && elapsed < 120.0, detail.str()};
  }

  // ---- criterion 6 -------------------------------------------------------
  std::pair<bool, std::string> attack_effectiveness() {
    std::size_t good_seeds = 0;
    double max_seed_seconds = 0.0;
    std::ostringstream detail;
    for (int seed : kSeeds) {
      const auto start = Clock::now();
      const RunResult& run = vanilla_run(seed);
      max_seed_seconds = std::max(max_seed_seconds, seconds_since(start));
      const double test = run.final_record().test_auc;
      const double cut = final_cut_leak(run);
      const double layer1 = final_layer1_leak(run);
      const bool ok = test >= 0.85 && cut >= 0.80 && cut >= layer1;
      good_seeds += ok;
      detail << "s" << seed << ":test=" << std::fixed << std::setprecision(3) << test
             << ",cut=" << cut << (ok ? " " : "(x) ");
    }
    detail << "max " << std::setprecision(0) << max_seed_seconds << "s/seed";
    return {good_seeds >= 4 && max_seed_seconds < 300.0, detail.str()};
  }

  // ---- criterion 7 -------------------------------------------------------
  std::pair<bool, std::string> gradient_side_defenses() {
    std::size_t good_seeds = 0;
    std::ostringstream detail;
    for (int seed : kSeeds) {
      ExperimentConfig noise_cfg = desk_benchmark(seed);
      noise_cfg.defense.grad_noise_s = 8.0;
      const RunResult& noise_run =
          cached_run("noise8/" + std::to_string(seed), noise_cfg);

      ExperimentConfig dp_cfg = desk_benchmark(seed);
      dp_cfg.defense.label_dp_epsilon = 0.5;
      const RunResult& dp_run = cached_run("labeldp/" + std::to_string(seed), dp_cfg);

      const RunResult& vanilla = vanilla_run(seed);
      const double norm_drop =
          norm_leak_late_mean(vanilla) - norm_leak_late_mean(noise_run);
      const double noise_cut = final_cut_leak(noise_run);
      const double dp_cut = final_cut_leak(dp_run);
      const bool ok = norm_drop >= 0.15 && noise_cut >= 0.70 && dp_cut >= 0.70;
      good_seeds += ok;
      detail << "s" << seed << ":drop=" << std::fixed << std::setprecision(2) << norm_drop
             << ",s8cut=" << noise_cut << ",dpcut=" << dp_cut << (ok ? " " : "(x) ");
    }
    return {good_seeds >= 4, detail.str()};
  }

  // ---- criterion 8 -------------------------------------------------------
  const std::vector<double>& sweep_alphas() const {
    static const std::vector<double> alphas{0.001, 0.003, 0.01, 0.03, 0.1};
    return alphas;
  }

  const RunResult& sweep_run(double alpha, int seed) {
    if (alpha == 0.0) return vanilla_run(seed);
    ExperimentConfig config = desk_benchmark(seed);
    config.defense.alpha_d = alpha;
    config.defense.dcor_floor = kSweepFloor;
    std::ostringstream key;
    key << "alpha/" << alpha << "/" << seed;
    return cached_run(key.str(), config);
  }

  std::pair<bool, std::string> dcor_defense() {
    std::vector<double> mean_leak, mean_test;
    for (double alpha : sweep_alphas()) {
      double leak_acc = 0.0, test_acc = 0.0;
      for (int seed : kSeeds) {
        const RunResult& run = sweep_run(alpha, seed);
        leak_acc += final_cut_leak(run);
        test_acc += run.final_record().test_auc;
      }
      mean_leak.push_back(leak_acc / 5.0);
      mean_test.push_back(test_acc / 5.0);
    }
    double base_test = 0.0;
    for (int seed : kSeeds) base_test += vanilla_run(seed).final_record().test_auc;
    base_test /= 5.0;

    bool knee_exists = false;
    double knee_alpha = 0.0;
    for (std::size_t i = 0; i < mean_leak.size(); ++i) {
      if (mean_leak[i] <= 0.60 && base_test - mean_test[i] <= 0.05) {
        knee_exists = true;
        knee_alpha = sweep_alphas()[i];
        break;
      }
    }

    // Weak monotonicity of seed-averaged leak in alpha, baseline included.
    std::vector<double> alphas_with_zero{0.0};
    std::vector<double> leaks_with_zero{0.0};
    double vanilla_leak = 0.0;
    for (int seed : kSeeds) vanilla_leak += final_cut_leak(vanilla_run(seed));
    leaks_with_zero[0] = vanilla_leak / 5.0;
    for (std::size_t i = 0; i < mean_leak.size(); ++i) {
      alphas_with_zero.push_back(sweep_alphas()[i]);
      leaks_with_zero.push_back(mean_leak[i]);
    }
    const double trend = spearman(alphas_with_zero, leaks_with_zero);

    std::ostringstream detail;
    detail << std::fixed << std::setprecision(3) << "leak by alpha:";
    for (std::size_t i = 0; i < mean_leak.size(); ++i) {
      detail << " " << sweep_alphas()[i] << "->" << mean_leak[i];
    }
    detail << "; knee alpha=" << knee_alpha << ", spearman=" << std::setprecision(2) << trend;
    return {knee_exists && trend <= 0.0, detail.str()};
  }

  // ---- criterion 9 -------------------------------------------------------
  std::pair<bool, std::string> leak_bounded() {
    // Criteria 6-8 ran first; the cache holds exactly their runs.
    double worst_margin = 1.0;
    std::string worst_key;
    std::size_t points = 0;
    for (const auto& [key, run] : run_cache_) {
      for (const MetricsRecord& record : run.records) {
        const auto leak = record.cut_spectral_leak();
        if (!leak) continue;
        ++points;
        const double margin = record.test_auc + 0.05 - *leak;
        if (margin < worst_margin) {
          worst_margin = margin;
          worst_key = key + "@step" + std::to_string(record.step);
        }
      }
    }
    std::ostringstream detail;
    detail << points << " evaluation points, worst margin " << std::fixed
           << std::setprecision(3) << worst_margin << " at " << worst_key;
    return {worst_margin >= 0.0, detail.str()};
  }

  // ---- criterion 10 ------------------------------------------------------
  std::pair<bool, std::string> cost_of_privacy() {
    auto shallow_run = [this](double alpha, int seed) -> const RunResult& {
      ExperimentConfig config = desk_benchmark(seed);
      config.model.h_widths = {};
      config.defense.alpha_d = alpha;  // spec-default floor: unreleased defense
      std::ostringstream key;
      key << "shallow/" << alpha << "/" << seed;
      return cached_run(key.str(), config);
    };
    auto deep_run = [this](double alpha, int seed) -> const RunResult& {
      ExperimentConfig config = desk_benchmark(seed);
      config.defense.alpha_d = alpha;
      std::ostringstream key;
      key << "deep-unfloored/" << alpha << "/" << seed;
      return cached_run(key.str(), config);
    };

    std::ostringstream detail;
    for (double alpha : {0.03, 0.1}) {
      double gap_acc = 0.0, recovery_acc = 0.0;
      for (int seed : kSeeds) {
        const double base = shallow_run(0.0, seed).final_record().test_auc;
        const double small = shallow_run(alpha, seed).final_record().test_auc;
        const double large = deep_run(alpha, seed).final_record().test_auc;
        gap_acc += base - small;
        recovery_acc += large - small;
      }
      const double gap = gap_acc / 5.0;
      const double recovery = recovery_acc / 5.0;
      detail << "alpha=" << alpha << ": gap=" << std::fixed << std::setprecision(3) << gap
             << ", recovery=" << recovery << "; ";
      if (gap >= 0.05) {
        const bool ok = recovery >= 0.5 * gap;
        detail << (ok ? "3-layer recovers" : "3-layer fails to recover");
        return {ok, detail.str()};
      }
    }
    detail << "no alpha degraded the 1-layer party by 0.05";
    return {false, detail.str()};
  }

  // ---- criterion 11 ------------------------------------------------------
  std::pair<bool, std::string> balanced_data() {
    std::size_t good_seeds = 0;
    std::ostringstream detail;
    for (int seed : kSeeds) {
      const RunResult& open_run =
          cached_run("balanced-open/" + std::to_string(seed), balanced_benchmark(seed));
      ExperimentConfig defended = balanced_benchmark(seed);
      defended.defense.alpha_d = 0.03;
      defended.defense.dcor_floor = kSweepFloor;
      const RunResult& defended_run =
          cached_run("balanced-defended/" + std::to_string(seed), defended);
      const double open_leak = final_cut_leak(open_run);
      const double defended_leak = final_cut_leak(defended_run);
      const bool ok = open_leak >= 0.75 && defended_leak <= 0.60;
      good_seeds += ok;
      detail << "s" << seed << ":" << std::fixed << std::setprecision(3) << open_leak << "->"
             << defended_leak << (ok ? " " : "(x) ");
    }
    return {good_seeds >= 4, detail.str()};
  }

  // ---- criterion 12 ------------------------------------------------------
  std::pair<bool, std::string> determinism() {
    namespace fs = std::filesystem;
    fs::create_directories(workdir_);
    const fs::path config_path = fs::path(workdir_) / "determinism.json";
    {
      std::ofstream out(config_path);
      out << R"({
  "data": {"synthetic": {"n": 4000, "positive_ratio": 0.1, "dim": 10,
                          "class_separation": 3.5, "noise_sigma": 1.0, "seed": 17}},
  "model": {"f_widths": [16, 16, 16], "h_widths": [16]},
  "train": {"batch_size": 128, "lr": 0.001, "epochs": 2, "seed": 17},
  "defense": {"alpha_d": 0.003},
  "attack": {"methods": ["spectral", "norm"], "eval_every": 10}
})";
    }
    const fs::path out_a = fs::path(workdir_) / "metrics_a.jsonl";
    const fs::path out_b = fs::path(workdir_) / "metrics_b.jsonl";
    for (const auto& [out, log] :
         {std::pair{out_a, "a"}, std::pair{out_b, "b"}}) {
      const std::string cmd = "'" + cli_path_ + "' run --config '" + config_path.string() +
                              "' --out '" + out.string() + "' > '" +
                              (fs::path(workdir_) / (std::string("stdout_") + log)).string() +
                              "'";
      const int rc = std::system(cmd.c_str());
      if (rc != 0) return {false, "cli exited with " + std::to_string(rc)};
    }
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    const std::string a = slurp(out_a);
    const std::string b = slurp(out_b);
    std::ostringstream detail;
    detail << a.size() << " bytes, " << (a == b ? "identical" : "DIFFERENT");
    return {!a.empty() && a == b, detail.str()};
  }

  // ---- criterion 13 ------------------------------------------------------
  std::pair<bool, std::string> audit_clean() {
    std::ostringstream detail;
    detail << audit_records_ << " audit records across " << run_cache_.size() << " runs, "
           << audit_violations_ << " violations";
    return {audit_records_ > 0 && audit_violations_ == 0, detail.str()};
  }

  std::string cli_path_;
  std::string workdir_;
  std::map<std::string, RunResult> run_cache_;
  std::size_t audit_records_ = 0;
  std::size_t audit_violations_ = 0;
  std::vector<CriterionResult> results_;
};

}  // namespace

int main(int argc, char** argv) {
  std::string cli_path = "splitsim";
  std::string workdir = "acceptance_work";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--cli") {
      cli_path = argv[i + 1];
    } else if (flag == "--workdir") {
      workdir = argv[i + 1];
    } else {
      std::cerr << "unknown flag " << flag << "\n";
      return 2;
    }
  }
  AcceptanceSuite suite(cli_path, workdir);
  return suite.run_all();
}
