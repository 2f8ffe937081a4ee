// Acceptance suite: ten end-to-end checks covering convergence, constraint
// maintenance, oracle equivalences, recovery quality on synthetic data,
// whitening performance, deflation, and CLI determinism. Each check prints
// one PASS/FAIL line; the process exits nonzero if any check fails.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tgcca/deflation.hpp"
#include "tgcca/io.hpp"
#include "tgcca/linalg.hpp"
#include "tgcca/simgen.hpp"
#include "tgcca/solver.hpp"
#include "tgcca/stats.hpp"

using namespace tgcca;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::mt19937_64 rng(12345);

Matrix random_matrix(Index r, Index c) {
  std::normal_distribution<double> d(0.0, 1.0);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = d(rng);
  return m;
}

Vector random_vector(Index n) { return random_matrix(n, 1).col(0); }

Matrix random_orthonormal(Index p, Index r) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(p, r));
  return qr.householderQ() * Matrix::Identity(p, r);
}

DesignMatrix all_connected(Index l) {
  Matrix c = Matrix::Ones(l, l);
  c.diagonal().setZero();
  return DesignMatrix{c};
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct RandomInstance {
  BlockSet bs;
  SolverOptions opts;
  SchemeG scheme;
};

// Randomized problem sweep shared by checks 1 and 2: block counts 2/3/5,
// orders 1-3, ranks 1-3, both regimes, both association functions.
RandomInstance make_instance(int i) {
  static const int kL[] = {2, 3, 5};
  RandomInstance inst;
  const Index num_blocks = kL[i % 3];
  inst.opts.regime = (i / 3) % 2 ? Regime::nonseparable : Regime::separable;
  inst.scheme =
      SchemeG{(i / 6) % 2 ? Scheme::square : Scheme::identity};
  const Index n = 12;
  std::uniform_int_distribution<int> extra(0, 2);
  for (Index l = 0; l < num_blocks; ++l) {
    const Index d = 1 + (i + static_cast<int>(l)) % 3;
    const Index rank = 1 + (i / 2 + static_cast<int>(l)) % 3;
    std::vector<Index> dims;
    for (Index m = 0; m < d; ++m) dims.push_back(rank + extra(rng));
    Index p = 1;
    for (Index v : dims) p *= v;
    inst.bs.blocks.push_back(Block{random_matrix(n, p), dims});
    inst.opts.ranks.push_back(rank);
  }
  inst.opts.tau.assign(static_cast<size_t>(num_blocks), 0.01);
  inst.opts.seed = static_cast<std::uint64_t>(i);
  inst.opts.track_constraints = true;
  preprocess(inst.bs);
  return inst;
}

struct SweepStats {
  bool monotone = true;
  int converged = 0;
  int total = 0;
  double worst_orth = 0.0;
  double worst_lambda = 0.0;
  double seconds = 0.0;
};

SweepStats run_sweep() {
  SweepStats s;
  const auto t0 = Clock::now();
  for (int i = 0; i < 200; ++i) {
    RandomInstance inst = make_instance(i);
    Problem prob =
        build_problem(inst.bs, all_connected(inst.bs.size()), inst.scheme,
                      inst.opts);
    FitResult fit =
        bca_fit(prob, inst.opts, random_start(prob, inst.opts,
                                              inst.opts.seed));
    for (size_t t = 1; t < fit.trace.size(); ++t)
      if (fit.trace[t] < fit.trace[t - 1] - 1e-10) s.monotone = false;
    if (fit.converged) ++s.converged;
    ++s.total;
    s.worst_orth = std::max(s.worst_orth, fit.max_orth_residual);
    s.worst_lambda = std::max(s.worst_lambda, fit.max_lambda_residual);
  }
  s.seconds = seconds_since(t0);
  return s;
}

// ---------------------------------------------------------- checks 1 and 2

bool check_monotone(const SweepStats& s) {
  const bool pass = s.monotone &&
                    s.converged >= (s.total * 95) / 100 &&
                    s.seconds < 120.0;
  std::printf(
      "%s  1 monotone convergence: 200 instances, %d/%d converged, "
      "traces %s, %.1fs\n",
      pass ? "PASS" : "FAIL", s.converged, s.total,
      s.monotone ? "nondecreasing" : "NOT monotone", s.seconds);
  return pass;
}

bool check_constraints(const SweepStats& s) {
  const bool pass = s.worst_orth <= 1e-8 && s.worst_lambda <= 1e-10;
  std::printf(
      "%s  2 constraint maintenance: worst orthonormality %.2e, worst "
      "weight-norm/feasibility %.2e\n",
      pass ? "PASS" : "FAIL", s.worst_orth, s.worst_lambda);
  return pass;
}

// ---------------------------------------------------------------- check 3

bool check_oracles() {
  bool pass = true;

  // (a) Procrustes maximizer beats 10^4 random feasible points per F
  std::vector<Matrix> candidates;
  for (int c = 0; c < 10000; ++c) candidates.push_back(random_orthonormal(5, 2));
  for (int i = 0; i < 1000 && pass; ++i) {
    Matrix f = random_matrix(5, 2);
    const double best = (f.transpose() * procrustes_max(f).q).trace();
    for (const Matrix& cand : candidates)
      if ((f.transpose() * cand).trace() > best + 1e-10) pass = false;
  }

  // (b) ball/hyperplane projection: KKT residuals and a 10^6-point circle
  // grid in two dimensions
  for (int i = 0; i < 20 && pass; ++i) {
    Vector u = random_vector(2);
    const double alpha = 0.5 + 0.1 * i;
    Vector lambda_ref = random_vector(2) * 2.0;
    // pick a level the rescaled reference fails, so the projection is the
    // active branch (as in the solver)
    const double reach = u.dot(std::sqrt(alpha) * lambda_ref.normalized());
    const double eps_level = reach + 0.2 * (std::sqrt(alpha) * u.norm() - reach);
    Vector proj = ball_hyperplane_project(lambda_ref, u, alpha, eps_level);
    if (std::abs(proj.squaredNorm() - alpha) > 1e-10) pass = false;
    if (std::abs(u.dot(proj) - eps_level) > 1e-10) pass = false;
    const double dist = (proj - lambda_ref).norm();
    const double two_pi = 2.0 * std::acos(-1.0);
    for (int g = 0; g < 1000000; ++g) {
      const double th = two_pi * double(g) / 1000000.0;
      Vector pt(2);
      pt << std::cos(th), std::sin(th);
      pt *= std::sqrt(alpha);
      if (u.dot(pt) >= eps_level && (pt - lambda_ref).norm() < dist - 1e-8)
        pass = false;
    }
  }

  // (c) two vector blocks: the fitted criterion equals twice the largest
  // singular value of the whitened cross-covariance (regularized CCA)
  for (int i = 0; i < 5 && pass; ++i) {
    const Index n = 25, p1 = 5 + i, p2 = 4;
    BlockSet bs;
    bs.blocks.push_back(Block{random_matrix(n, p1), {p1}});
    bs.blocks.push_back(Block{random_matrix(n, p2), {p2}});
    preprocess(bs);
    SolverOptions opts;
    opts.ranks = {1, 1};
    opts.tau = {0.01, 0.01};
    opts.n_starts = 3;
    Problem prob =
        build_problem(bs, all_connected(2), SchemeG{Scheme::identity}, opts);
    MultiStartResult ms = multi_start_fit(prob, opts);
    Matrix s12 = bs.blocks[0].x.transpose() * bs.blocks[1].x / double(n);
    Matrix m1 = bs.blocks[0].x.transpose() * bs.blocks[0].x / double(n) +
                0.01 * Matrix::Identity(p1, p1);
    Matrix m2 = bs.blocks[1].x.transpose() * bs.blocks[1].x / double(n) +
                0.01 * Matrix::Identity(p2, p2);
    const double oracle =
        2.0 * truncated_svd(spd_inv_sqrt(m1) * s12 * spd_inv_sqrt(m2), 1)
                  .singular[0];
    if (std::abs(ms.best.criterion() - oracle) > 1e-6 * oracle) pass = false;
  }

  std::printf("%s  3 oracle equivalences: Procrustes grid, projection KKT + "
              "1e6-point grid, two-block CCA criterion\n",
              pass ? "PASS" : "FAIL");
  return pass;
}

// ---------------------------------------------------------------- check 4

bool check_tandem_equivalence() {
  bool pass = true;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    BlockSet bs;
    bs.blocks.push_back(Block{random_matrix(10, 12), {4, 3}});
    bs.blocks.push_back(Block{random_matrix(10, 15), {3, 5}});
    preprocess(bs);
    SolverOptions opts;
    opts.ranks = {1, 1};
    opts.tau = {0.01, 0.01};
    opts.seed = static_cast<std::uint64_t>(i);

    SolverOptions composed = opts;
    composed.use_tandem = false;
    Problem prob =
        build_problem(bs, all_connected(2), SchemeG{Scheme::identity}, opts);
    FitResult a = bca_fit(prob, opts, random_start(prob, opts, opts.seed));
    FitResult b =
        bca_fit(prob, composed, random_start(prob, composed, opts.seed));
    if (a.trace.size() != b.trace.size()) {
      pass = false;
      continue;
    }
    for (size_t l = 0; l < 2; ++l)
      worst = std::max(worst, (a.vectors[l].reconstruct() -
                               b.vectors[l].reconstruct())
                                  .norm());
    for (size_t t = 0; t < a.trace.size(); ++t)
      worst = std::max(worst, std::abs(a.trace[t] - b.trace[t]));
  }
  pass = pass && worst <= 1e-10;
  std::printf("%s  4 rank-1 tandem = composed mode/weight updates: max "
              "deviation %.2e\n",
              pass ? "PASS" : "FAIL", worst);
  return pass;
}

// ---------------------------------------------------------------- check 5

bool check_gradient() {
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Index num_blocks = 2 + i % 2;
    const Index n = 9;
    BlockSet bs;
    std::vector<Vector> w;
    for (Index l = 0; l < num_blocks; ++l) {
      const Index p = 3 + (i + static_cast<int>(l)) % 4;
      bs.blocks.push_back(Block{random_matrix(n, p), {p}});
      w.push_back(random_vector(p));
    }
    DesignMatrix c = all_connected(num_blocks);
    SchemeG g{i % 2 ? Scheme::square : Scheme::identity};
    std::vector<Vector> y;
    for (Index l = 0; l < num_blocks; ++l)
      y.push_back(bs.blocks[static_cast<size_t>(l)].x *
                  w[static_cast<size_t>(l)]);
    Vector grad = block_gradient(bs, c, g, y, 0);
    const double h = 1e-6;
    for (Index j = 0; j < grad.size(); ++j) {
      std::vector<Vector> wp = w, wm = w;
      wp[0][j] += h;
      wm[0][j] -= h;
      const double fd = (criterion_value(bs, c, g, wp) -
                         criterion_value(bs, c, g, wm)) /
                        (2.0 * h);
      worst = std::max(worst, std::abs(fd - grad[j]) /
                                  std::max(1.0, std::abs(grad[j])));
    }
  }
  const bool pass = worst <= 1e-6;
  std::printf("%s  5 analytic gradient vs central differences: max relative "
              "error %.2e\n",
              pass ? "PASS" : "FAIL", worst);
  return pass;
}

// ------------------------------------------------------------ checks 6, 7

SimSpec recovery_spec(double eta, Index num_blocks, std::uint64_t seed) {
  SimSpec spec;
  spec.n = 1000;
  spec.folds = 10;
  spec.eta = eta;
  spec.seed = seed;
  const std::vector<Index> dims{10, 10};
  const double rho = std::sqrt(0.8);
  SimBlockSpec cross;
  cross.dims = dims;
  cross.w = builtin_shape("cross", dims).cp;
  cross.rho = rho;
  SimBlockSpec rect;
  rect.dims = dims;
  rect.w = builtin_shape("rect", dims).cp;
  rect.rho = rho;
  spec.blocks = {cross, rect};
  for (Index l = 2; l < num_blocks; ++l) {
    SimBlockSpec extra = rect;
    spec.blocks.push_back(extra);
  }
  return spec;
}

// Median cosine per block over folds for the given ranks.
std::vector<double> recovery_medians(const SimulatedData& data,
                                     std::vector<Index> ranks) {
  const Index num_blocks = static_cast<Index>(data.true_w.size());
  std::vector<std::vector<double>> cosines(static_cast<size_t>(num_blocks));
  SolverOptions opts;
  opts.ranks = std::move(ranks);
  // the mode-wise covariance factors are trace-normalized to mean eigenvalue
  // ~1; the noise covariance here is deliberately non-separable, so the
  // per-factor ridge sqrt(tau) must dominate that unit scale to pull the
  // constraint metric toward the identity, under which the planted weights
  // are the population optimum
  opts.tau.assign(static_cast<size_t>(num_blocks), 10.0);
  opts.n_starts = 5;
  opts.seed = 1;
  for (const BlockSet& fold : data.folds) {
    BlockSet bs = fold;
    preprocess(bs);
    PipelineResult res = fit_pipeline(bs, all_connected(num_blocks),
                                      SchemeG{Scheme::identity}, opts);
    for (Index l = 0; l < num_blocks; ++l)
      cosines[static_cast<size_t>(l)].push_back(cosine_alignment(
          data.true_w[static_cast<size_t>(l)],
          res.blocks[static_cast<size_t>(l)].w));
  }
  std::vector<double> med;
  for (auto& c : cosines) med.push_back(median(c));
  return med;
}

struct RecoveryOutcome {
  bool pass6 = false;
  std::vector<double> low_snr_medians;  // rank-matched medians at -20 dB
};

RecoveryOutcome check_recovery() {
  RecoveryOutcome out;
  const auto t0 = Clock::now();
  SimulatedData snr0 = sample_dataset(recovery_spec(1.0, 2, 21));
  std::vector<double> med0 = recovery_medians(snr0, {2, 1});
  SimulatedData snr20 = sample_dataset(recovery_spec(0.1, 2, 22));
  std::vector<double> med20 = recovery_medians(snr20, {2, 1});
  std::vector<double> med20r1 = recovery_medians(snr20, {1, 1});
  const double secs = seconds_since(t0);
  out.low_snr_medians = med20;
  out.pass6 = med0[0] >= 0.95 && med0[1] >= 0.95 && med20[0] >= 0.75 &&
              med20[1] >= 0.75 && med20[0] >= med20r1[0] - 1e-12 &&
              med20[1] >= med20r1[1] - 1e-12 && secs < 300.0;
  std::printf(
      "%s  6 recovery: 0dB medians %.3f/%.3f (need 0.95), -20dB "
      "rank-matched %.3f/%.3f (need 0.75) vs rank-1 %.3f/%.3f, %.1fs\n",
      out.pass6 ? "PASS" : "FAIL", med0[0], med0[1], med20[0], med20[1],
      med20r1[0], med20r1[1], secs);
  return out;
}

bool check_multiblock_gain(const std::vector<double>& two_block_medians) {
  SimulatedData data = sample_dataset(recovery_spec(0.1, 5, 22));
  std::vector<double> med = recovery_medians(data, {2, 1, 1, 1, 1});
  const bool pass = med[0] >= two_block_medians[0] &&
                    med[1] >= two_block_medians[1];
  std::printf(
      "%s  7 multiblock gain at -20dB: five-block medians %.3f/%.3f vs "
      "two-block %.3f/%.3f\n",
      pass ? "PASS" : "FAIL", med[0], med[1], two_block_medians[0],
      two_block_medians[1]);
  return pass;
}

// ---------------------------------------------------------------- check 8

// Whitening through the fully assembled Kronecker inverse root, streamed in
// column chunks so the p x p matrix never materializes.
Matrix explicit_whiten(const Matrix& x, const std::vector<Matrix>& inv_sqrt) {
  const Index p = x.cols();
  Matrix out(x.rows(), p);
  const Index chunk_cols =
      std::max<Index>(1, (Index{1} << 24) / std::max<Index>(p, 1));
  std::vector<Index> dims;
  for (const auto& f : inv_sqrt) dims.push_back(f.rows());
  Matrix wchunk(p, chunk_cols);
  for (Index j0 = 0; j0 < p; j0 += chunk_cols) {
    const Index cols = std::min(chunk_cols, p - j0);
    for (Index c = 0; c < cols; ++c) {
      Index rem = j0 + c;
      Matrix col = Matrix::Ones(1, 1);
      for (size_t m = 0; m < dims.size(); ++m) {
        const Index jm = rem % dims[m];
        rem /= dims[m];
        col = kronecker(inv_sqrt[m].col(jm), col);
      }
      wchunk.col(c) = col;
    }
    out.middleCols(j0, cols).noalias() = x * wchunk.leftCols(cols);
  }
  return out;
}

bool check_whitening() {
  bool equal_ok = true;
  double worst = 0.0;
  const Index n = 20;
  for (auto [q, d] : std::vector<std::pair<Index, Index>>{
           {10, 1}, {20, 1}, {10, 2}, {20, 2}, {10, 3}}) {
    Block blk;
    blk.dims.assign(static_cast<size_t>(d), q);
    Index p = 1;
    for (Index m = 0; m < d; ++m) p *= q;
    blk.x = random_matrix(n, p);
    RegularizationSpec spec = estimate_separable_m(blk, 1e-3);
    WhitenResult wr = whiten_block(blk, spec);
    std::vector<Matrix> inv_sqrt;
    for (const auto& f : spec.factors) inv_sqrt.push_back(spd_inv_sqrt(f));
    const double diff =
        (explicit_whiten(blk.x, inv_sqrt) - wr.block.x).cwiseAbs().maxCoeff();
    worst = std::max(worst, diff);
    if (diff > 1e-8) equal_ok = false;
  }

  // speed at q = 30, d = 3 (p = 27000)
  Block big;
  big.dims = {30, 30, 30};
  big.x = random_matrix(n, 27000);
  auto t0 = Clock::now();
  RegularizationSpec spec = estimate_separable_m(big, 1e-3);
  WhitenResult wr = whiten_block(big, spec);
  const double sep_s = seconds_since(t0);
  t0 = Clock::now();
  std::vector<Matrix> inv_sqrt;
  for (const auto& f : spec.factors) inv_sqrt.push_back(spd_inv_sqrt(f));
  Matrix xw = explicit_whiten(big.x, inv_sqrt);
  const double exp_s = seconds_since(t0);
  const double ratio = exp_s / std::max(sep_s, 1e-12);
  const bool pass = equal_ok && ratio >= 5.0;
  std::printf(
      "%s  8 whitening: max |mode-product - explicit| %.2e (need 1e-8), "
      "speedup at q=30,d=3: %.1fx (need 5x)\n",
      pass ? "PASS" : "FAIL", worst, ratio);
  // keep the optimizer honest about the big product
  volatile double sink = xw(0, 0) + wr.block.x(0, 0);
  (void)sink;
  return pass;
}

// ---------------------------------------------------------------- check 9

bool check_deflation() {
  // component orthogonality after a two-stage extraction
  double worst_gram = 0.0;
  for (int i = 0; i < 5; ++i) {
    BlockSet bs;
    bs.blocks.push_back(Block{random_matrix(30, 12), {4, 3}});
    bs.blocks.push_back(Block{random_matrix(30, 6), {6}});
    preprocess(bs);
    SolverOptions opts;
    opts.ranks = {1, 1};
    opts.tau = {0.01, 0.01};
    opts.seed = static_cast<std::uint64_t>(i);
    ComponentStack stack = extract_components(
        bs, all_connected(2), SchemeG{Scheme::identity}, opts, 2);
    if (stack.null_from < 2) continue;
    for (size_t l = 0; l < 2; ++l) {
      const Vector& y1 = stack.components[0][l];
      const Vector& y2 = stack.components[1][l];
      worst_gram = std::max(
          worst_gram, std::abs(y1.dot(y2)) / (y1.norm() * y2.norm()));
    }
  }

  // planted-factor recovery on noiseless rank-2 data
  const Index n = 50;
  Matrix a = random_matrix(n, 2);
  Matrix b = random_orthonormal(6, 2);
  Matrix c = random_orthonormal(5, 2);
  Vector lambda = (Vector(2) << 1.5, 0.7).finished();
  Block block{a * lambda.asDiagonal() * khatri_rao(c, b).transpose(), {6, 5}};
  Matrix rec = recover_shared_factors(block, b, c, lambda);
  double worst_cos = 1.0;
  for (Index r = 0; r < 2; ++r)
    worst_cos = std::min(worst_cos, cosine_alignment(a.col(r), rec.col(r)));

  const bool pass = worst_gram <= 1e-8 && worst_cos >= 0.999;
  std::printf(
      "%s  9 deflation: worst component Gram off-diagonal %.2e, planted "
      "factor cosine %.5f\n",
      pass ? "PASS" : "FAIL", worst_gram, worst_cos);
  return pass;
}

// --------------------------------------------------------------- check 10

#ifndef TGCCA_CLI_PATH
#define TGCCA_CLI_PATH ""
#endif

int run_cli(const std::string& args) {
  const std::string cmd = "TGCCA_DETERMINISTIC=1 " + std::string(TGCCA_CLI_PATH) +
                          " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool check_determinism() {
  if (std::string(TGCCA_CLI_PATH).empty()) {
    std::printf("FAIL 10 determinism: CLI path not configured\n");
    return false;
  }
  fs::path dir = fs::temp_directory_path() /
                 ("tgcca_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto path = [&](const std::string& s) { return (dir / s).string(); };
  write_text_file(path("sim.json"), R"({
    "n": 80, "folds": 3, "seed": 13, "eta": 1.0,
    "blocks": [
      {"dims": [6, 5], "shape": "rect", "rho": 0.8},
      {"dims": [5, 5], "shape": "cross", "rho": 0.8}
    ]
  })");
  write_text_file(path("fit.json"),
                  R"({"ranks": [1, 2], "tau": 0.01, "n_starts": 2, "seed": 4})");
  bool pass = true;
  for (const char* tag : {"a", "b"}) {
    pass = pass && run_cli("simulate --config " + path("sim.json") +
                           " --out " + path(std::string("data_") + tag)) == 0;
    pass = pass && run_cli("fit --config " + path("fit.json") + " --data " +
                           path(std::string("data_") + tag) + " --out " +
                           path(std::string("run_") + tag)) == 0;
  }
  if (pass) {
    const std::string csv_a = read_text_file(path("run_a/results.csv"));
    const std::string csv_b = read_text_file(path("run_b/results.csv"));
    pass = !csv_a.empty() && csv_a == csv_b;
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  std::printf("%s 10 determinism: repeated simulate+fit produce %s CSV "
              "outputs\n",
              pass ? "PASS" : "FAIL",
              pass ? "byte-identical" : "differing");
  return pass;
}

}  // namespace

int main() {
  int failures = 0;
  SweepStats sweep = run_sweep();
  failures += !check_monotone(sweep);
  failures += !check_constraints(sweep);
  failures += !check_oracles();
  failures += !check_tandem_equivalence();
  failures += !check_gradient();
  RecoveryOutcome rec = check_recovery();
  failures += !rec.pass6;
  failures += !check_multiblock_gain(rec.low_snr_medians);
  failures += !check_whitening();
  failures += !check_deflation();
  failures += !check_determinism();
  if (failures == 0)
    std::printf("all 10 acceptance checks passed\n");
  else
    std::printf("%d acceptance check(s) FAILED\n", failures);
  return failures == 0 ? 0 : 1;
}
