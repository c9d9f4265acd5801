#include "ewfs/ewmc.hpp"

#include "ewfs/missingness.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

namespace ewfs {
namespace {

using Instance = test::EwmcInstance;

Instance random_instance(std::uint64_t seed, Index max_n = 20, Index max_d = 10) {
  return test::random_ewmc_instance(seed, max_n, max_d);
}

// Eq. 4 written out cell by cell.
double objective_oracle(const Matrix& G, const Matrix& H, const Matrix& x_hat, const ImputationEnsemble& ens,
                        const Vector& v, double gamma) {
  const Matrix Z = G * H;
  double ensemble = 0, weighted = 0;
  for (Index i = 0; i < Z.rows(); ++i)
    for (Index j = 0; j < Z.cols(); ++j) {
      for (const auto& m : ens.members) ensemble += (Z(i, j) - m(i, j)) * (Z(i, j) - m(i, j));
      weighted += v(j) * v(j) * (Z(i, j) - x_hat(i, j)) * (Z(i, j) - x_hat(i, j));
    }
  return ensemble / static_cast<double>(ens.size()) + weighted + gamma * (G.squaredNorm() + H.squaredNorm());
}

TEST(ProjectObserved, Definition) {
  auto data = test::random_incomplete(5, 4, 0.0, 1);
  const Matrix Z = Matrix::Constant(5, 4, -3.0);
  EXPECT_EQ(project_observed(data, Z), data.values);
  data.mask(2, 1) = false;
  const Matrix one = project_observed(data, Z);
  EXPECT_EQ((one.array() != data.values.array()).count(), 1);
  EXPECT_EQ(one(2, 1), -3.0);
  data.mask.setConstant(false);
  EXPECT_EQ(project_observed(data, Z), Z);
  EXPECT_THROW(project_observed(data, Matrix::Zero(4, 4)), DataError);
}

TEST(Objective, MatchesCellwiseOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = random_instance(seed, 6, 4);
    const Matrix G = test::uniform_matrix(inst.data.rows(), inst.r, seed + 1);
    const Matrix H = test::uniform_matrix(inst.r, inst.data.cols(), seed + 2);
    EXPECT_NEAR(objective({G, H}, inst.x_hat, inst.ensemble, inst.v, inst.gamma),
                objective_oracle(G, H, inst.x_hat, inst.ensemble, inst.v, inst.gamma), 1e-10);
  }
}

TEST(Objective, ZeroFactorsPlugIn) {
  const auto data = test::random_incomplete(6, 4, 0.3, 2);
  ImputationEnsemble ens{{test::uniform_matrix(6, 4, 3)}, {"m"}};
  const Matrix x_hat = project_observed(data, Matrix::Zero(6, 4));
  const FactorPair zero{Matrix::Zero(6, 2), Matrix::Zero(2, 4)};
  EXPECT_NEAR(objective(zero, x_hat, ens, Vector::Ones(4), 20.0),
              ens.members[0].squaredNorm() + x_hat.squaredNorm(), 1e-12);
}

TEST(Objective, ZeroWeightsDropWeightedTerm) {
  const auto inst = random_instance(5);
  const Matrix G = test::uniform_matrix(inst.data.rows(), inst.r, 1);
  const Matrix H = test::uniform_matrix(inst.r, inst.data.cols(), 2);
  const Vector zero = Vector::Zero(inst.data.cols());
  double ensemble = 0;
  for (const auto& m : inst.ensemble.members) ensemble += (G * H - m).squaredNorm();
  ensemble /= static_cast<double>(inst.ensemble.size());
  EXPECT_NEAR(objective({G, H}, inst.x_hat, inst.ensemble, zero, inst.gamma),
              ensemble + inst.gamma * (G.squaredNorm() + H.squaredNorm()), 1e-10);
}

TEST(Objective, WeightedTermIdentity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = random_instance(seed);
    const Matrix G = test::uniform_matrix(inst.data.rows(), inst.r, seed + 1);
    const Matrix H = test::uniform_matrix(inst.r, inst.data.cols(), seed + 2);
    const Matrix Z = G * H;
    const Matrix x_hat = project_observed(inst.data, Z);
    const double lhs = ((Z - x_hat) * inst.v.asDiagonal()).squaredNorm();
    double rhs = 0;
    for (Index i = 0; i < Z.rows(); ++i)
      for (Index j = 0; j < Z.cols(); ++j)
        if (inst.data.mask(i, j))
          rhs += inst.v(j) * inst.v(j) * (Z(i, j) - inst.data.values(i, j)) * (Z(i, j) - inst.data.values(i, j));
    EXPECT_NEAR(lhs, rhs, 1e-10);
  }
}

TEST(SolveH, ZeroGradientOfColumnSubproblems) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = random_instance(seed);
    const Matrix G = orthonormal_init(inst.data.rows(), inst.r, seed) * 2.0 + test::uniform_matrix(inst.data.rows(), inst.r, seed);
    const Matrix H = solve_h(G, inst.x_hat, inst.ensemble, inst.v, inst.gamma);
    EXPECT_LT(test::max_h_gradient(inst, G, H), 1e-6) << "seed " << seed;
  }
}

TEST(SolveG, ZeroGradientOfRowSubproblems) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = random_instance(seed);
    const Matrix H = test::uniform_matrix(inst.r, inst.data.cols(), seed + 3);
    const Matrix G = solve_g(H, inst.x_hat, inst.ensemble, inst.v, inst.gamma);
    EXPECT_LT(test::max_g_gradient(inst, G, H), 1e-6) << "seed " << seed;
  }
}

TEST(SolveH, LeastSquaresProjectionLimit) {
  const auto data = test::random_incomplete(10, 4, 0.0, 3);
  const ImputationEnsemble ens{{data.values}, {"x"}};
  const Matrix G = orthonormal_init(10, 3, 5);
  const Matrix H = solve_h(G, data.values, ens, Vector::Zero(4), 1e-9);
  EXPECT_LT((H - G.transpose() * data.values).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SolveH, RidgeShrinks) {
  const auto inst = random_instance(8);
  const Matrix G = orthonormal_init(inst.data.rows(), inst.r, 8);
  const double a = solve_h(G, inst.x_hat, inst.ensemble, inst.v, 1.0).norm();
  const double b = solve_h(G, inst.x_hat, inst.ensemble, inst.v, 2.0).norm();
  EXPECT_LT(b, a);
}

TEST(SolveG, ProjectionLimit) {
  const auto data = test::random_incomplete(7, 6, 0.0, 4);
  const ImputationEnsemble ens{{data.values}, {"x"}};
  const Matrix H = orthonormal_init(6, 2, 9).transpose();
  const Matrix G = solve_g(H, data.values, ens, Vector::Zero(6), 1e-9);
  EXPECT_LT((G - data.values * H.transpose()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SolveG, RowSwapEquivariance) {
  auto inst = random_instance(12);
  const Matrix H = test::uniform_matrix(inst.r, inst.data.cols(), 4);
  const Matrix G = solve_g(H, inst.x_hat, inst.ensemble, inst.v, inst.gamma);
  inst.x_hat.row(0).swap(inst.x_hat.row(1));
  for (auto& m : inst.ensemble.members) m.row(0).swap(m.row(1));
  const Matrix swapped = solve_g(H, inst.x_hat, inst.ensemble, inst.v, inst.gamma);
  EXPECT_LT((swapped.row(0) - G.row(1)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((swapped.row(1) - G.row(0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(OrthonormalInit, OrthonormalAndSeeded) {
  const Matrix G = orthonormal_init(15, 4, 2);
  EXPECT_LT((G.transpose() * G - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(G, orthonormal_init(15, 4, 2));
  EXPECT_NE(G, orthonormal_init(15, 4, 3));
}

TEST(NormalizeWeights, ClampAndScale) {
  EXPECT_EQ(normalize_weights(Vector{{-1.0, 2.0, 4.0}}), (Vector{{0.0, 0.5, 1.0}}));
  EXPECT_EQ(normalize_weights(Vector{{-1.0, 0.0}}), Vector::Ones(2));
}

TEST(MStage, FullRankReproducesCompleteData) {
  const auto data = make_complete_dataset(test::uniform_matrix(8, 4, 6), test::balanced_labels(8, 2));
  ImputerConfig icfg;
  icfg.svd_rank = 4;
  const auto ens = build_ensemble(data, default_ensemble_methods(), icfg);
  EwmcConfig cfg;
  cfg.rank = 4;
  cfg.gamma = 1e-6;
  cfg.eta = 1e-14;
  cfg.max_inner_iter = 2000;
  const auto result = run_m_stage(data, ens, Vector::Ones(4), cfg);
  const Matrix product = result.factors.product();
  EXPECT_LT((product - data.values).norm() / data.values.norm(), 1e-3);
}

TEST(MStage, TraceNonIncreasing) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto data = test::random_incomplete(20, 6, 0.2, seed);
    const auto ens = build_ensemble(data, std::vector<ImputerKind>{ImputerKind::Mean}, {});
    EwmcConfig cfg;
    cfg.rank = 3;
    cfg.gamma = 0.5;
    cfg.eta = 1e-9;
    cfg.seed = seed;
    const auto result = run_m_stage(data, ens, Vector::Ones(6), cfg);
    for (std::size_t k = 1; k < result.trace.size(); ++k)
      EXPECT_LE(result.trace[k], result.trace[k - 1] + 1e-8) << "seed " << seed << " k " << k;
  }
}

TEST(MStage, ObservedCellsExactAndDeterministic) {
  const auto data = test::random_incomplete(25, 6, 0.2, 3);
  const auto ens = build_ensemble(data, default_ensemble_methods(), {});
  EwmcConfig cfg;
  cfg.rank = 3;
  cfg.seed = 17;
  const Vector v = Vector{{1.0, 0.2, 0.5, 0.0, 0.9, 0.3}};
  const auto a = run_m_stage(data, ens, v, cfg);
  const auto b = run_m_stage(data, ens, v, cfg);
  EXPECT_EQ(a.Z, b.Z);
  EXPECT_EQ(a.trace, b.trace);
  for (Index i = 0; i < data.rows(); ++i)
    for (Index j = 0; j < data.cols(); ++j)
      if (data.mask(i, j)) EXPECT_EQ(a.Z(i, j), data.values(i, j));
  EXPECT_EQ(static_cast<int>(a.trace.size()), a.iterations);
}

TEST(MStage, WineFivePercentConverges) {
  const auto wine = load_csv(test::data_dir() / "wine.csv", "class");
  const auto data = apply_normalizer(inject(wine, {Mechanism::MCAR, 0.05, 1}), fit_normalizer(wine));
  const auto ens = build_ensemble(data, default_ensemble_methods(), {});
  const auto result = run_m_stage(data, ens, Vector::Ones(13), {});
  EXPECT_TRUE(result.converged);
  EXPECT_LE(result.iterations, 200);
}

TEST(EwmcConfig, Validation) {
  EwmcConfig cfg;
  EXPECT_THROW(cfg.validate(4, 3), ConfigError);
  cfg.rank = 3;
  EXPECT_NO_THROW(cfg.validate(4, 3));
  cfg.gamma = 0;
  EXPECT_THROW(cfg.validate(4, 3), ConfigError);
}

}  // namespace
}  // namespace ewfs
