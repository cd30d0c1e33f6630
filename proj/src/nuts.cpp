#include "rae/nuts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "rae/error.hpp"

namespace rae {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct PhasePoint {
  Vec q;
  Vec p;
  Vec grad;
  double log_p = 0.0;
};

struct DualAveraging {
  double delta;
  double gamma = 0.05;
  double t0 = 10.0;
  double kappa = 0.75;
  double mu = 0.0;
  double s_bar = 0.0;
  double x_bar = 0.0;
  double counter = 0.0;

  void restart(double step) {
    mu = std::log(10.0 * step);
    s_bar = 0.0;
    x_bar = 0.0;
    counter = 0.0;
  }

  double learn(double accept_stat) {
    counter += 1.0;
    accept_stat = std::min(1.0, accept_stat);
    const double eta = 1.0 / (counter + t0);
    s_bar = (1.0 - eta) * s_bar + eta * (delta - accept_stat);
    const double x = mu - s_bar * std::sqrt(counter) / gamma;
    const double x_eta = std::pow(counter, -kappa);
    x_bar = (1.0 - x_eta) * x_bar + x_eta * x;
    return std::exp(x);
  }

  double final_step() const { return std::exp(x_bar); }
};

/// Welford accumulator for the metric (full covariance; the diagonal kind
/// reads only the diagonal).
struct CovarianceEstimator {
  Vec mean;
  Mat m2;
  double n = 0.0;

  explicit CovarianceEstimator(Eigen::Index dim) : mean(Vec::Zero(dim)), m2(Mat::Zero(dim, dim)) {}

  void add(const Vec& q) {
    n += 1.0;
    const Vec d = q - mean;
    mean += d / n;
    m2 += d * (q - mean).transpose();
  }

  /// Shrunk toward 1e-3 * I, heavier for short windows.
  Mat regularized() const {
    const auto dim = mean.size();
    Mat cov = n > 1.0 ? Mat(m2 / (n - 1.0)) : Mat(Mat::Identity(dim, dim));
    cov = (n / (n + 5.0)) * cov;
    cov.diagonal().array() += 1e-3 * (5.0 / (n + 5.0));
    return cov;
  }

  void reset() {
    mean.setZero();
    m2.setZero();
    n = 0.0;
  }
};

class NutsChain {
 public:
  NutsChain(const LogDensityFn& f, std::vector<double> init, const NutsConfig& cfg, Rng& rng)
      : f_(f), cfg_(cfg), rng_(rng), dim_(static_cast<Eigen::Index>(init.size())) {
    set_metric(Mat::Identity(dim_, dim_));
    z_.q = Eigen::Map<const Vec>(init.data(), dim_);
    z_.p = Vec::Zero(dim_);
    z_.grad = Vec::Zero(dim_);
    z_.log_p = evaluate(z_.q, z_.grad);
    if (!std::isfinite(z_.log_p)) {
      throw Error(Errc::InvalidArgument, "initial point has non-finite log density");
    }
  }

  ChainOutput run();

 private:
  struct Transition {
    double accept_stat = 0.0;
    int depth = 0;
    bool divergent = false;
  };

  double evaluate(const Vec& q, Vec& grad) const {
    return f_(std::span<const double>(q.data(), static_cast<std::size_t>(dim_)),
              std::span<double>(grad.data(), static_cast<std::size_t>(dim_)));
  }

  void set_metric(const Mat& inv_metric) {
    if (cfg_.metric == MetricKind::Diagonal) {
      inv_diag_ = inv_metric.diagonal();
    } else {
      inv_dense_ = inv_metric;
      chol_ = Eigen::LLT<Mat>(inv_dense_).matrixL();
    }
  }

  Vec p_sharp(const Vec& p) const {
    if (cfg_.metric == MetricKind::Diagonal) return inv_diag_.cwiseProduct(p);
    return inv_dense_ * p;
  }

  double kinetic(const Vec& p) const { return 0.5 * p.dot(p_sharp(p)); }

  double hamiltonian(const PhasePoint& z) const {
    const double h = -z.log_p + kinetic(z.p);
    return std::isnan(h) ? std::numeric_limits<double>::infinity() : h;
  }

  void sample_momentum(PhasePoint& z) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec u(dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) u[i] = normal(rng_);
    if (cfg_.metric == MetricKind::Diagonal) {
      z.p = u.cwiseQuotient(inv_diag_.cwiseSqrt());
    } else {
      // inv_metric = L L', p = L^{-T} u has covariance inv_metric^{-1}.
      z.p = chol_.transpose().triangularView<Eigen::Upper>().solve(u);
    }
  }

  void leapfrog(PhasePoint& z, double eps) {
    z.p += 0.5 * eps * z.grad;
    z.q += eps * p_sharp(z.p);
    z.log_p = evaluate(z.q, z.grad);
    if (!std::isfinite(z.log_p)) {
      z.log_p = kNegInf;
      return;
    }
    z.p += 0.5 * eps * z.grad;
  }

  static bool criterion(const Vec& p_sharp_minus, const Vec& p_sharp_plus, const Vec& rho) {
    return p_sharp_plus.dot(rho) > 0 && p_sharp_minus.dot(rho) > 0;
  }

  bool build_tree(int depth, PhasePoint& z_propose, Vec& p_sharp_beg, Vec& p_sharp_end, Vec& rho,
                  Vec& p_beg, Vec& p_end, double h0, double sign, int& n_leapfrog,
                  double& log_sum_weight, double& sum_metro_prob, bool& divergent);

  Transition transition();
  void init_step_size();

  const LogDensityFn& f_;
  NutsConfig cfg_;
  Rng& rng_;
  Eigen::Index dim_;
  Vec inv_diag_;
  Mat inv_dense_;
  Mat chol_;
  double step_ = 1.0;
  PhasePoint z_;
};

bool NutsChain::build_tree(int depth, PhasePoint& z_propose, Vec& p_sharp_beg, Vec& p_sharp_end,
                           Vec& rho, Vec& p_beg, Vec& p_end, double h0, double sign,
                           int& n_leapfrog, double& log_sum_weight, double& sum_metro_prob,
                           bool& divergent) {
  if (depth == 0) {
    leapfrog(z_, sign * step_);
    ++n_leapfrog;
    const double h = hamiltonian(z_);
    if (h - h0 > cfg_.max_delta_h) divergent = true;
    log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
    sum_metro_prob += h0 - h > 0 ? 1.0 : std::exp(h0 - h);
    z_propose = z_;
    p_sharp_beg = p_sharp(z_.p);
    p_sharp_end = p_sharp_beg;
    rho += z_.p;
    p_beg = z_.p;
    p_end = p_beg;
    return !divergent;
  }

  Vec p_init_end(dim_), p_sharp_init_end(dim_), rho_init = Vec::Zero(dim_);
  double log_sum_weight_init = kNegInf;
  if (!build_tree(depth - 1, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg, p_init_end,
                  h0, sign, n_leapfrog, log_sum_weight_init, sum_metro_prob, divergent)) {
    return false;
  }

  PhasePoint z_propose_final = z_;
  Vec p_final_beg(dim_), p_sharp_final_beg(dim_), rho_final = Vec::Zero(dim_);
  double log_sum_weight_final = kNegInf;
  if (!build_tree(depth - 1, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final,
                  p_final_beg, p_end, h0, sign, n_leapfrog, log_sum_weight_final, sum_metro_prob,
                  divergent)) {
    return false;
  }

  const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
  log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
  if (log_sum_weight_final > log_sum_weight_subtree) {
    z_propose = z_propose_final;
  } else if (uniform01(rng_) < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
    z_propose = z_propose_final;
  }

  const Vec rho_subtree = rho_init + rho_final;
  rho += rho_subtree;

  bool persist = criterion(p_sharp_beg, p_sharp_end, rho_subtree);
  persist = persist && criterion(p_sharp_beg, p_sharp_final_beg, rho_init + p_final_beg);
  persist = persist && criterion(p_sharp_init_end, p_sharp_end, rho_final + p_init_end);
  return persist;
}

NutsChain::Transition NutsChain::transition() {
  sample_momentum(z_);
  PhasePoint z_fwd = z_, z_bck = z_, z_sample = z_, z_propose = z_;

  const Vec ps = p_sharp(z_.p);
  Vec p_sharp_fwd_bck = ps, p_sharp_fwd_fwd = ps, p_sharp_bck_fwd = ps, p_sharp_bck_bck = ps;
  Vec p_fwd_bck = z_.p, p_fwd_fwd = z_.p, p_bck_fwd = z_.p, p_bck_bck = z_.p;
  Vec rho = z_.p;

  double log_sum_weight = 0.0;
  const double h0 = hamiltonian(z_);
  int n_leapfrog = 0;
  double sum_metro_prob = 0.0;
  bool divergent = false;
  int depth = 0;

  while (depth < cfg_.max_depth) {
    Vec rho_fwd = Vec::Zero(dim_), rho_bck = Vec::Zero(dim_);
    double log_sum_weight_subtree = kNegInf;
    bool valid;
    if (uniform01(rng_) > 0.5) {
      z_ = z_fwd;
      rho_bck = rho;
      p_bck_fwd = p_fwd_bck;
      p_sharp_bck_fwd = p_sharp_fwd_bck;
      valid = build_tree(depth, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd, p_fwd_bck,
                         p_fwd_fwd, h0, 1.0, n_leapfrog, log_sum_weight_subtree, sum_metro_prob,
                         divergent);
      z_fwd = z_;
    } else {
      z_ = z_bck;
      rho_fwd = rho;
      p_fwd_bck = p_bck_fwd;
      p_sharp_fwd_bck = p_sharp_bck_fwd;
      valid = build_tree(depth, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck, p_bck_fwd,
                         p_bck_bck, h0, -1.0, n_leapfrog, log_sum_weight_subtree, sum_metro_prob,
                         divergent);
      z_bck = z_;
    }
    if (!valid) break;
    ++depth;

    if (log_sum_weight_subtree > log_sum_weight) {
      z_sample = z_propose;
    } else if (uniform01(rng_) < std::exp(log_sum_weight_subtree - log_sum_weight)) {
      z_sample = z_propose;
    }
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

    rho = rho_bck + rho_fwd;
    bool persist = criterion(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
    persist = persist && criterion(p_sharp_bck_bck, p_sharp_fwd_bck, rho_bck + p_fwd_bck);
    persist = persist && criterion(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_fwd + p_bck_fwd);
    if (!persist) break;
  }

  z_ = z_sample;
  Transition t;
  t.accept_stat = n_leapfrog > 0 ? sum_metro_prob / n_leapfrog : 0.0;
  t.depth = depth;
  t.divergent = divergent;
  return t;
}

void NutsChain::init_step_size() {
  const PhasePoint z_init = z_;
  sample_momentum(z_);
  double h0 = hamiltonian(z_);
  leapfrog(z_, step_);
  double delta_h = h0 - hamiltonian(z_);
  const int direction = delta_h > std::log(0.8) ? 1 : -1;
  for (int iter = 0; iter < 200; ++iter) {
    z_ = z_init;
    sample_momentum(z_);
    h0 = hamiltonian(z_);
    leapfrog(z_, step_);
    delta_h = h0 - hamiltonian(z_);
    if (direction == 1 && !(delta_h > std::log(0.8))) break;
    if (direction == -1 && !(delta_h < std::log(0.8))) break;
    step_ = direction == 1 ? 2.0 * step_ : 0.5 * step_;
    if (step_ > 1e7 || step_ < 1e-12) break;
  }
  z_ = z_init;
  step_ = std::clamp(step_, 1e-12, 1e3);
}

ChainOutput NutsChain::run() {
  ChainOutput out;
  const int warmup = std::max(0, cfg_.warmup);

  int init_buffer = 75, term_buffer = 50, base_window = 25;
  if (warmup < init_buffer + term_buffer + base_window) {
    init_buffer = static_cast<int>(0.15 * warmup);
    term_buffer = static_cast<int>(0.1 * warmup);
    base_window = warmup - init_buffer - term_buffer;
  }
  const int slow_end = warmup - term_buffer;
  int window_size = base_window;
  int window_end = init_buffer + window_size;  // exclusive
  if (window_end + 2 * window_size > slow_end) window_end = slow_end;

  DualAveraging da{cfg_.target_accept};
  CovarianceEstimator estimator(dim_);
  init_step_size();
  da.restart(step_);

  for (int it = 0; it < warmup; ++it) {
    const auto t = transition();
    step_ = da.learn(t.accept_stat);
    if (base_window > 0 && it >= init_buffer && it < slow_end) {
      estimator.add(z_.q);
      if (it + 1 == window_end) {
        set_metric(estimator.regularized());
        estimator.reset();
        init_step_size();
        da.restart(step_);
        window_size *= 2;
        int next_end = window_end + window_size;
        if (next_end + 2 * window_size > slow_end) next_end = slow_end;
        window_end = next_end;
      }
    }
  }
  if (warmup > 0) step_ = da.final_step();

  out.draws.reserve(static_cast<std::size_t>(std::max(0, cfg_.draws)));
  double accept_total = 0.0, depth_total = 0.0;
  for (int it = 0; it < cfg_.draws; ++it) {
    const auto t = transition();
    if (t.divergent) ++out.divergences;
    accept_total += t.accept_stat;
    depth_total += t.depth;
    out.draws.emplace_back(z_.q.data(), z_.q.data() + dim_);
  }
  if (cfg_.draws > 0) {
    out.mean_accept = accept_total / cfg_.draws;
    out.mean_tree_depth = depth_total / cfg_.draws;
  }
  out.step_size = step_;
  Mat metric = cfg_.metric == MetricKind::Diagonal ? Mat(inv_diag_.asDiagonal()) : inv_dense_;
  out.inv_metric.resize(static_cast<std::size_t>(dim_ * dim_));
  for (Eigen::Index r = 0; r < dim_; ++r) {
    for (Eigen::Index c = 0; c < dim_; ++c) out.inv_metric[static_cast<std::size_t>(r * dim_ + c)] = metric(r, c);
  }
  return out;
}

}  // namespace

ChainOutput run_nuts_chain(const LogDensityFn& log_density, std::vector<double> init,
                           const NutsConfig& config, Rng& rng) {
  NutsChain chain(log_density, std::move(init), config, rng);
  return chain.run();
}

}  // namespace rae
