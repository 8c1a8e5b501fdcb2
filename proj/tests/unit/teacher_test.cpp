#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "s2cd/teacher/bundle.hpp"
#include "s2cd/teacher/train_teacher.hpp"
#include "s2cd/teacher/value_heads.hpp"

using namespace s2cd;
using namespace s2cd::teacher;

namespace {

std::vector<double> random_obs(Rng& rng, std::size_t d = mdp::kObservationSize) {
  std::vector<double> o(d);
  for (auto& x : o) x = uniform(rng, 0, 1);
  return o;
}

TeacherBundle zero_bundle() {
  const std::size_t d = mdp::kObservationSize;
  return {nn::DenseNet({d, {8}, 3, nn::Head::SoftmaxPolicy}), nn::DenseNet({d, {8}, 1, nn::Head::ScalarValue}),
          nn::DenseNet({d, {8}, 3, nn::Head::VectorValue}), nn::DenseNet({d, {8}, 3, nn::Head::VectorValue})};
}

TeacherBundle random_bundle(Rng& rng) {
  const std::size_t d = mdp::kObservationSize;
  return {nn::DenseNet::initialized({d, {8}, 3, nn::Head::SoftmaxPolicy}, rng),
          nn::DenseNet::initialized({d, {8}, 1, nn::Head::ScalarValue}, rng),
          nn::DenseNet::initialized({d, {8}, 3, nn::Head::VectorValue}, rng),
          nn::DenseNet::initialized({d, {8}, 3, nn::Head::VectorValue}, rng),
          Quality::Low,
          50000,
          99,
          0.75};
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("s2cd_teacher_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(ValueHeads, HeldOutRowsAreEveryTenth) {
  EXPECT_FALSE(is_heldout(0));
  EXPECT_TRUE(is_heldout(9));
  EXPECT_TRUE(is_heldout(19));
  EXPECT_FALSE(is_heldout(20));
}

TEST(ValueHeads, ConstantTargetIsLearned) {
  Rng rng(1);
  std::vector<SupervisedRow> rows;
  for (int i = 0; i < 2000; ++i) rows.push_back({random_obs(rng, 4), static_cast<int>(i % 3), 0.3, -0.4});
  const auto fit = fit_value_heads(rows, {150, 64, 1e-3, 10.0, 1000}, rng, {16});
  EXPECT_EQ(fit.report.train_rows, 1800u);
  EXPECT_EQ(fit.report.heldout_rows, 200u);
  double r_sq = 0, q_sq = 0;
  for (int i = 0; i < 300; ++i) {
    const auto o = random_obs(rng, 4);
    for (double r : fit.return_net.evaluate(o)) r_sq += (r - 0.3) * (r - 0.3);
    for (double q : fit.qvalue_net.evaluate(o)) q_sq += (q + 0.4) * (q + 0.4);
  }
  EXPECT_LT(std::sqrt(r_sq / 900), 0.01);
  EXPECT_LT(std::sqrt(q_sq / 900), 0.01);
}

TEST(ValueHeads, PlantedLinearTargetGeneralizes) {
  Rng rng(2);
  const std::array<std::array<double, 3>, 3> w{{{0.5, -0.3, 0.2}, {-0.2, 0.4, 0.1}, {0.1, 0.1, -0.6}}};
  std::vector<SupervisedRow> rows;
  for (int i = 0; i < 4000; ++i) {
    auto o = random_obs(rng, 3);
    const int a = static_cast<int>(uniform_index(rng, 3));
    double q = 0.1 * a;
    for (int j = 0; j < 3; ++j) q += w[a][j] * o[j];
    rows.push_back({o, a, q, q});
  }
  const auto fit = fit_value_heads(rows, {60, 64, 2e-3, 10.0, 1000}, rng, {32, 32});
  EXPECT_LT(fit.report.q_heldout_mse, 1e-3);
  EXPECT_LT(fit.report.return_heldout_mse, 1e-3);
}

TEST(ValueHeads, FullBatchFitIgnoresDatasetDuplication) {
  Rng rng(3);
  std::vector<SupervisedRow> rows;
  for (int i = 0; i < 1000; ++i)
    rows.push_back({random_obs(rng, 4), static_cast<int>(uniform_index(rng, 3)), uniform(rng, -1, 1), uniform(rng, -2, 2)});
  std::vector<SupervisedRow> doubled = rows;
  doubled.insert(doubled.end(), rows.begin(), rows.end());
  const FitConfig cfg{20, 0, 1e-3, 1e9, 1000};
  Rng init(4);
  const auto ret = nn::DenseNet::initialized(value_head_spec(4, {8}), init);
  const auto q = nn::DenseNet::initialized(value_head_spec(4, {8}), init);
  ValueHeadFitter a(ret, q, cfg), b(ret, q, cfg);
  Rng ra(5), rb(6);  // full batch uses no randomness
  a.fit(rows, ra);
  b.fit(doubled, rb);
  for (std::size_t i = 0; i < ret.param_count(); ++i) {
    EXPECT_NEAR(a.return_net().params()[i], b.return_net().params()[i], 1e-10);
    EXPECT_NEAR(a.qvalue_net().params()[i], b.qvalue_net().params()[i], 1e-10);
  }
}

TEST(ValueHeads, RejectsBadRows) {
  Rng rng(7);
  std::vector<SupervisedRow> rows(1000, SupervisedRow{{0.1, 0.2}, 0, 0.0, 0.0});
  const FitConfig cfg{1, 64, 1e-3, 10.0, 1000};
  EXPECT_THROW(fit_value_heads(std::span(rows).first(999), cfg, rng, {4}), std::invalid_argument);
  rows[5].action = 3;
  EXPECT_THROW(fit_value_heads(rows, cfg, rng, {4}), std::invalid_argument);
  rows[5].action = 0;
  rows[6].q_target = std::nan("");
  EXPECT_THROW(fit_value_heads(rows, cfg, rng, {4}), std::invalid_argument);
}

TEST(Advice, UniformTeacherPicksFollow) {
  const auto b = zero_bundle();
  const auto adv = teacher_advise(b, std::vector<double>(11, 0.5));
  EXPECT_EQ(adv.action, 0);
  for (double p : adv.probs) EXPECT_NEAR(p, 1.0 / 3, 1e-15);
  EXPECT_EQ(adv.r_pred, 0.0);
  for (double q : adv.q_pred) EXPECT_EQ(q, 0.0);
}

TEST(Advice, MatchesTheNetworksAndIsDeterministic) {
  Rng rng(8);
  const auto b = random_bundle(rng);
  for (int i = 0; i < 100; ++i) {
    const auto o = random_obs(rng);
    const auto adv = teacher_advise(b, o);
    const auto p = b.actor.evaluate(o);
    EXPECT_EQ(adv.action, std::max_element(p.begin(), p.end()) - p.begin());
    EXPECT_EQ(adv.r_pred, b.return_net.evaluate(o)[adv.action]);
    EXPECT_EQ(adv.q_pred[2], b.qvalue_net.evaluate(o)[2]);
    const auto again = teacher_advise(b, o);
    EXPECT_EQ(again.action, adv.action);
    EXPECT_EQ(again.q_pred, adv.q_pred);
  }
}

TEST(Advice, RejectsMalformedObservations) {
  const auto b = zero_bundle();
  EXPECT_THROW(teacher_advise(b, std::vector<double>(10, 0.5)), std::invalid_argument);
  auto o = std::vector<double>(11, 0.5);
  o[3] = 1.5;
  EXPECT_THROW(teacher_advise(b, o), std::invalid_argument);
  o[3] = std::nan("");
  EXPECT_THROW(teacher_advise(b, o), std::invalid_argument);
}

TEST(Bundle, SaveLoadRoundTripPreservesEverything) {
  Rng rng(9);
  const auto b = random_bundle(rng);
  const auto dir = scratch("roundtrip");
  save_bundle(b, dir);
  const auto c = load_bundle(dir);
  EXPECT_EQ(bundle_checksum(c), bundle_checksum(b));
  EXPECT_EQ(c.quality, Quality::Low);
  EXPECT_EQ(c.training_steps, 50000u);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.eval_success, 0.75);
  std::filesystem::remove_all(dir);
}

TEST(Bundle, ChecksumSeesSingleParameterChange) {
  Rng rng(10);
  auto b = random_bundle(rng);
  const auto before = bundle_checksum(b);
  b.qvalue_net.params().back() = std::nextafter(b.qvalue_net.params().back(), 1.0);
  EXPECT_NE(bundle_checksum(b), before);
}

TEST(Bundle, RejectsBrokenManifestsAndShapes) {
  Rng rng(11);
  const auto dir = scratch("broken");
  EXPECT_THROW(load_bundle(dir), ConfigError);
  save_bundle(random_bundle(rng), dir);
  std::ofstream(dir / kManifestName) << R"({"quality_tag": "superb", "training_steps": 1, "seed": 1, "eval_success": 0})";
  EXPECT_THROW(load_bundle(dir), ConfigError);
  std::ofstream(dir / kManifestName) << "{ not json";
  EXPECT_THROW(load_bundle(dir), ConfigError);
  std::filesystem::remove_all(dir);

  auto b = random_bundle(rng);
  b.critic = nn::DenseNet({11, {8}, 3, nn::Head::VectorValue});
  EXPECT_THROW(b.validate(), ConfigError);
  EXPECT_THROW(parse_quality("medium"), ConfigError);
  EXPECT_EQ(parse_quality("complex"), Quality::Complex);
}

TEST(TrainTeacher, BudgetsFollowQuality) {
  EXPECT_EQ(default_teacher_steps(Quality::High), 100000u);
  EXPECT_EQ(default_teacher_steps(Quality::Low), 50000u);
  EXPECT_EQ(default_teacher_steps(Quality::Complex), 100000u);
  TeacherTrainConfig cfg;
  cfg.quality = Quality::Complex;
  EXPECT_EQ(teacher_sim_config(cfg).fidelity, highway::Fidelity::Complex);
  cfg.quality = Quality::Low;
  EXPECT_EQ(teacher_sim_config(cfg).fidelity, highway::Fidelity::Simple);
}

TEST(TrainTeacher, ShortRunIsDeterministicAndFitsHeads) {
  TeacherTrainConfig cfg;
  cfg.hp.total_steps = 3000;
  cfg.hp.steps_per_phase = 1000;
  cfg.hp.update_epochs = 2;
  cfg.hp.hidden = {16, 16};
  cfg.eval_episodes = 3;
  const auto a = train_teacher(cfg, 5);
  const auto b = train_teacher(cfg, 5);
  EXPECT_EQ(bundle_checksum(a.bundle), bundle_checksum(b.bundle));
  EXPECT_EQ(a.rows_seen, 3000u);
  EXPECT_EQ(a.last_fit.train_rows + a.last_fit.heldout_rows, 3000u);
  EXPECT_EQ(a.last_fit.heldout_rows, 300u);
  EXPECT_EQ(a.metrics.size(), 3u);
  EXPECT_NO_THROW(a.bundle.validate());
  EXPECT_GE(a.bundle.eval_success, 0.0);
  EXPECT_LE(a.bundle.eval_success, 1.0);
  EXPECT_TRUE(std::isfinite(a.last_fit.q_heldout_mse));
}
