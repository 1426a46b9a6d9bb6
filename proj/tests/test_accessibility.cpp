#include "sfca/accessibility.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace sfca;

namespace {

WeightMatrix<double> dense_weights(const std::vector<std::vector<double>>& k) {
  WeightMatrix<double> w(static_cast<std::int64_t>(k.size()), static_cast<std::int64_t>(k.front().size()));
  for (std::size_t i = 0; i < k.size(); ++i)
    for (std::size_t j = 0; j < k[i].size(); ++j)
      if (k[i][j] != 0.0) w.insert(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)) = k[i][j];
  w.makeCompressed();
  return w;
}

PairDistances table(const std::vector<std::vector<double>>& d) {
  PairDistances m(static_cast<std::int64_t>(d.size()), static_cast<std::int64_t>(d.front().size()));
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d[i].size(); ++j)
      if (std::isfinite(d[i][j])) m.insert(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)) = d[i][j];
  m.makeCompressed();
  return m;
}

std::vector<GridCell> cells(std::size_t n) {
  std::vector<GridCell> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = {0, static_cast<std::int64_t>(i), static_cast<std::int64_t>(i), {50.0 * i + 25, 25}};
  return c;
}

PopulationField population(std::vector<double> total, std::vector<double> female = {}, std::vector<double> male = {}) {
  const auto n = static_cast<Eigen::Index>(total.size());
  if (female.empty()) female.assign(total.size(), 0.0);
  if (male.empty()) male.assign(total.size(), 0.0);
  PopulationField p;
  p.total = Eigen::Map<Eigen::VectorXd>(total.data(), n);
  p.female = Eigen::Map<Eigen::VectorXd>(female.data(), n);
  p.male = Eigen::Map<Eigen::VectorXd>(male.data(), n);
  return p;
}

Facility fac(std::string id, FacilityKind k, double cap, std::optional<GenderDesignation> g = std::nullopt) {
  return {std::move(id), {0, 0}, k, cap, g};
}

struct RandomInstance {
  oracle::DenseInstance dense;
  PairDistances d;
};

RandomInstance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t m, double d0) {
  std::uniform_real_distribution<double> u(0, 1);
  RandomInstance r;
  r.dense.pop.resize(n);
  r.dense.cap.resize(m);
  r.dense.d.assign(n, std::vector<double>(m, kUnreachable));
  for (auto& p : r.dense.pop) p = u(rng) < 0.1 ? 0.0 : 100 * u(rng);
  for (auto& s : r.dense.cap) s = std::floor(1 + 5 * u(rng));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (u(rng) < 0.3) r.dense.d[i][j] = d0 * u(rng);
  r.d = table(r.dense.d);
  return r;
}

}  // namespace

TEST_CASE("decay kernel") {
  const DecayKernel<double> k{402, 1609};
  CHECK(decay_weight(0.0, k) == 1.0);
  CHECK(decay_weight(1700.0, k) == 0.0);
  CHECK(decay_weight(402.0, k) == doctest::Approx(std::exp(-1.0)));
  CHECK(decay_weight(402.0, k) == doctest::Approx(0.367879).epsilon(1e-6));
  CHECK(decay_weight(1609.0, k) > 0.0);
  CHECK(decay_weight(std::nextafter(1609.0, 2000.0), k) == 0.0);
  CHECK_THROWS_AS(decay_weight(-1.0, k), Error);
  double prev = 2.0;
  for (double d = 0; d < 2000; d += 7.5) {
    const double w = decay_weight(d, k);
    CHECK(w <= prev);
    CHECK(w >= 0.0);
    prev = w;
  }
  // Works for other scalar types.
  CHECK(decay_weight(0.0f, DecayKernel<float>{}) == 1.0f);
  CHECK(decay_weight<long double>(402.0L, DecayKernel<long double>{}) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("provider ratios") {
  const auto w1 = dense_weights({{1.0}});
  const Eigen::VectorXd s1 = Eigen::VectorXd::Constant(1, 1.0);
  const Eigen::VectorXd p1 = Eigen::VectorXd::Constant(1, 25.0);
  CHECK(provider_ratios<double>(w1, s1, p1).ratio[0] == doctest::Approx(0.04));

  const auto w2 = dense_weights({{1.0}, {0.5}});
  const Eigen::VectorXd s2 = Eigen::VectorXd::Constant(1, 2.0);
  Eigen::VectorXd p2(2);
  p2 << 10, 20;
  CHECK(provider_ratios<double>(w2, s2, p2).ratio[0] == doctest::Approx(0.1));

  const auto w3 = dense_weights({{1.0, 0.0}});
  Eigen::VectorXd s3(2);
  s3 << 1, 1;
  const auto r3 = provider_ratios<double>(w3, s3, p1);
  CHECK(r3.ratio[1] == 0.0);
  REQUIRE(r3.zero_demand.size() == 1);
  CHECK(r3.zero_demand[0] == 1);

  const Eigen::VectorXd neg = Eigen::VectorXd::Constant(1, -1.0);
  CHECK_THROWS_AS(provider_ratios<double>(w1, s1, neg), Error);
}

TEST_CASE("accessibility scores") {
  const auto w1 = dense_weights({{1.0}});
  CHECK(accessibility_scores<double>(w1, Eigen::VectorXd::Constant(1, 0.04))[0] == doctest::Approx(0.04));
  const auto w2 = dense_weights({{1.0, 0.5}});
  Eigen::VectorXd r(2);
  r << 0.04, 0.02;
  CHECK(accessibility_scores<double>(w2, r)[0] == doctest::Approx(0.05));
  const auto w0 = dense_weights({{0.0}});
  CHECK(accessibility_scores<double>(w0, Eigen::VectorXd::Constant(1, 3.0))[0] == 0.0);
}

TEST_CASE("sparse engine matches the dense loop oracle") {
  std::mt19937_64 rng(101);
  const DecayKernel<double> k{402, 1609};
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = random_instance(rng, 60, 15, 1700);
    const auto w = kernel_weights<double>(inst.d, k);
    const Eigen::Map<const Eigen::VectorXd> cap(inst.dense.cap.data(), static_cast<Eigen::Index>(inst.dense.cap.size()));
    const Eigen::Map<const Eigen::VectorXd> pop(inst.dense.pop.data(), static_cast<Eigen::Index>(inst.dense.pop.size()));
    const auto r = provider_ratios<double>(w, cap, pop);
    const Eigen::VectorXd a = accessibility_scores<double>(w, r.ratio);
    const auto want = oracle::dense_2sfca(inst.dense, 402, 1609);
    for (std::size_t i = 0; i < want.size(); ++i)
      CHECK(a[static_cast<Eigen::Index>(i)] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("capacity conservation and homogeneity") {
  std::mt19937_64 rng(103);
  const DecayKernel<double> k{402, 1609};
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = random_instance(rng, 80, 20, 1500);
    // Give every facility some demand.
    for (std::size_t j = 0; j < inst.dense.cap.size(); ++j) inst.dense.d[j][j] = 10.0, inst.dense.pop[j] = 5.0 + j;
    inst.d = table(inst.dense.d);
    const auto w = kernel_weights<double>(inst.d, k);
    Eigen::VectorXd cap = Eigen::Map<Eigen::VectorXd>(inst.dense.cap.data(), static_cast<Eigen::Index>(inst.dense.cap.size()));
    Eigen::VectorXd pop = Eigen::Map<Eigen::VectorXd>(inst.dense.pop.data(), static_cast<Eigen::Index>(inst.dense.pop.size()));
    const Eigen::VectorXd a = accessibility_scores<double>(w, provider_ratios<double>(w, cap, pop).ratio);
    CHECK(pop.dot(a) == doctest::Approx(cap.sum()).epsilon(1e-9));
    const Eigen::VectorXd a2 = accessibility_scores<double>(w, provider_ratios<double>(w, Eigen::VectorXd(2 * cap), pop).ratio);
    const Eigen::VectorXd ah = accessibility_scores<double>(w, provider_ratios<double>(w, cap, Eigen::VectorXd(2 * pop)).ratio);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      CHECK(a2[i] == doctest::Approx(2 * a[i]).epsilon(1e-12));
      CHECK(ah[i] == doctest::Approx(0.5 * a[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("moving a facility away never raises the total it serves") {
  // Per-cell scores can rise (the facility's ratio grows as far demand drops
  // out faster than near demand), but the population-weighted total it
  // delivers stays at its capacity while in reach and then falls to zero.
  std::mt19937_64 rng(107);
  const DecayKernel<double> k{402, 1609};
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = random_instance(rng, 50, 1, 1500);
    inst.dense.d[0][0] = 5.0;
    inst.dense.pop[0] = 10.0;
    Eigen::VectorXd pop = Eigen::Map<Eigen::VectorXd>(inst.dense.pop.data(), 50);
    const Eigen::VectorXd cap = Eigen::VectorXd::Constant(1, inst.dense.cap[0]);
    double prev = kUnreachable;
    for (double shift = 0; shift < 2000; shift += 100) {
      auto moved = inst.dense.d;
      for (auto& row : moved)
        if (std::isfinite(row[0])) row[0] += shift;
      const auto w = kernel_weights<double>(table(moved), k);
      const Eigen::VectorXd a = accessibility_scores<double>(w, provider_ratios<double>(w, cap, pop).ratio);
      const double served = pop.dot(a);
      CHECK(served <= prev * (1 + 1e-12));
      prev = served;
    }
    CHECK(prev == 0.0);
  }
}

TEST_CASE("a single demand cell never gains when its facility moves away") {
  const DecayKernel<double> k{402, 1609};
  const Eigen::VectorXd pop = Eigen::VectorXd::Constant(1, 40.0);
  const Eigen::VectorXd cap = Eigen::VectorXd::Constant(1, 3.0);
  double prev = kUnreachable;
  for (double d = 0; d < 2000; d += 50) {
    const auto w = kernel_weights<double>(table({{d}}), k);
    const double a = accessibility_scores<double>(w, provider_ratios<double>(w, cap, pop).ratio)[0];
    CHECK(a <= prev * (1 + 1e-12));
    prev = a;
  }
}

TEST_CASE("people per facility") {
  CHECK(people_per_facility(0.040) == doctest::Approx(25.0));
  CHECK(std::round(people_per_facility(0.034) * 100) / 100 == 29.41);
  CHECK(std::isinf(people_per_facility(0.0)));
  Eigen::ArrayXd a(3);
  a << 0.04, 0.0, 0.5;
  const Eigen::ArrayXd p = people_per_facility(a);
  CHECK(p[0] == doctest::Approx(25.0));
  CHECK(std::isinf(p[1]));
  CHECK(p[2] == 2.0);
}

TEST_CASE("scenario runs over kinds and gender streams") {
  const auto c = cells(2);
  const PopulationField pop = population({100, 50}, {60, 30}, {40, 20});
  const std::vector<Facility> f{fac("w", FacilityKind::kWaterPump, 2, GenderDesignation::kAll),
                                fac("lf", FacilityKind::kLatrine, 1, GenderDesignation::kFemale),
                                fac("lm", FacilityKind::kLatrine, 1, GenderDesignation::kMale),
                                fac("la", FacilityKind::kLatrine, 4, GenderDesignation::kAll)};
  const PairDistances d = table({{0, 0, 0, 0}, {0, 0, 0, 0}});
  const KindSettings ks;

  const ScenarioResult total = run_scenario({}, f, pop, c, d, ks);
  CHECK(total.field.values(FacilityKind::kWaterPump)[0] == doctest::Approx(2.0 / 150));
  CHECK(total.field.values(FacilityKind::kLatrine)[0] == doctest::Approx(6.0 / 150));
  CHECK(total.field.values(FacilityKind::kBathingCubicle)[0] == 0.0);
  CHECK(total.field.mean[0] == doctest::Approx((2.0 / 150 + 6.0 / 150) / 3));
  CHECK(total.field.scenario == "total");

  // Female stream: female latrine competes for female demand, all-gender for total.
  const ScenarioResult fem = run_scenario({GenderStream::kFemale, 0.75}, f, pop, c, d, ks);
  CHECK(fem.field.values(FacilityKind::kLatrine)[0] == doctest::Approx(1.0 / 90 + 0.75 * 4 / 150));
  CHECK(fem.field.values(FacilityKind::kWaterPump)[0] == doctest::Approx(0.75 * 2 / 150));
  CHECK(fem.facilities_used == 3);

  const ScenarioResult male75 = run_scenario({GenderStream::kMale, 0.75}, f, pop, c, d, ks);
  const ScenarioResult male100 = run_scenario({GenderStream::kMale, 1.0}, f, pop, c, d, ks);
  CHECK(male75.field.values(FacilityKind::kLatrine)[0] == doctest::Approx(1.0 / 60 + 4.0 / 150));
  CHECK((male75.field.by_kind.array() == male100.field.by_kind.array()).all());

  // Disabled kinds drop out of the mean.
  KindSettings only_latrine;
  only_latrine.enabled = {false, true, false};
  const ScenarioResult ol = run_scenario({}, f, pop, c, d, only_latrine);
  CHECK(ol.field.mean[0] == doctest::Approx(6.0 / 150));
  CHECK(ol.field.values(FacilityKind::kWaterPump)[0] == 0.0);

  // Missing gender metadata in a gender run is an error.
  std::vector<Facility> ng = f;
  ng[0].gender.reset();
  CHECK_THROWS_AS(run_scenario({GenderStream::kFemale, 1.0}, ng, pop, c, d, ks), Error);
  CHECK_NOTHROW(run_scenario({}, ng, pop, c, d, ks));
  CHECK_THROWS_AS(run_scenario({GenderStream::kFemale, 0.0}, f, pop, c, d, ks), Error);
  CHECK_THROWS_AS(run_scenario({GenderStream::kFemale, 1.5}, f, pop, c, d, ks), Error);
}

TEST_CASE("all-gender factor scales a lone all-gender facility") {
  const auto c = cells(3);
  const PopulationField pop = population({10, 20, 30}, {5, 10, 15}, {5, 10, 15});
  const std::vector<Facility> f{fac("a", FacilityKind::kLatrine, 3, GenderDesignation::kAll)};
  const PairDistances d = table({{100}, {300}, {900}});
  const auto full = run_scenario({GenderStream::kFemale, 1.0}, f, pop, c, d, {});
  const auto cut = run_scenario({GenderStream::kFemale, 0.75}, f, pop, c, d, {});
  for (Eigen::Index i = 0; i < 3; ++i)
    CHECK(cut.field.values(FacilityKind::kLatrine)[i] ==
          doctest::Approx(0.75 * full.field.values(FacilityKind::kLatrine)[i]).epsilon(1e-15));
}

TEST_CASE("zero-demand facilities are reported") {
  const auto c = cells(1);
  const PopulationField pop = population({10});
  const std::vector<Facility> f{fac("near", FacilityKind::kLatrine, 1), fac("far", FacilityKind::kLatrine, 1)};
  const PairDistances d = table({{0, kUnreachable}});
  const auto r = run_scenario({}, f, pop, c, d, {});
  REQUIRE(r.zero_demand_facilities.size() == 1);
  CHECK(r.zero_demand_facilities[0] == "far");
  CHECK(r.field.values(FacilityKind::kLatrine)[0] == doctest::Approx(0.1));
}

TEST_CASE("change fields") {
  AccessField a;
  a.cells = cells(2);
  a.by_kind.setConstant(2, kKindCount, 0.040);
  a.mean.setConstant(2, 0.040);
  AccessField b = a;
  CHECK(change_field(a, b).mean.isZero(0.0));
  b.by_kind.setConstant(2, kKindCount, 0.034);
  b.mean.setConstant(2, 0.034);
  CHECK(change_field(a, b).mean[0] == doctest::Approx(-0.006));
  AccessField c = a;
  c.mean[1] += 0.15;
  CHECK(change_field(a, c).mean[1] == doctest::Approx(0.15));
  AccessField other = a;
  other.cells[1].cell_id = 99;
  CHECK_THROWS_AS(change_field(a, other), Error);
  AccessField shorter;
  shorter.cells = cells(1);
  CHECK_THROWS_AS(change_field(a, shorter), Error);
}

TEST_CASE("block aggregation") {
  const auto c = cells(4);  // centroids at x = 25, 75, 125, 175
  Eigen::VectorXd v(4);
  v << 0.02, 0.04, 0.10, 0.30;
  const std::vector<Block> blocks{{"west", Polygon::rectangle({0, 0}, {100, 50})},
                                  {"east", Polygon::rectangle({100, 0}, {200, 50})},
                                  {"empty", Polygon::rectangle({500, 0}, {600, 50})}};
  const auto s = aggregate_blocks(c, v, blocks);
  CHECK(*s[0].mean == doctest::Approx(0.03));
  CHECK(*s[1].mean == doctest::Approx(0.20));
  CHECK(s[0].n_cells == 2);
  CHECK_FALSE(s[2].mean.has_value());
  CHECK(s[2].n_cells == 0);

  Eigen::VectorXd after = v;
  after[0] += 0.30;
  after[1] += 0.00;
  const auto ch = aggregate_block_change(c, v, after, blocks);
  CHECK(*ch[0].delta == doctest::Approx(0.15));
  CHECK(*ch[1].delta == doctest::Approx(0.0));
  CHECK_FALSE(ch[2].delta.has_value());
}

TEST_CASE("reducers") {
  Eigen::VectorXd v(3), p(3);
  v << 1, 2, 4;
  p << 1, 1, 2;
  const std::vector<std::size_t> all{0, 1, 2};
  CHECK(*reduce(v, all, Reducer::kCellMean, p) == doctest::Approx(7.0 / 3));
  CHECK(*reduce(v, all, Reducer::kPopulationWeighted, p) == doctest::Approx(11.0 / 4));
  CHECK_FALSE(reduce(v, {}, Reducer::kCellMean, p).has_value());
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  CHECK_FALSE(reduce(v, all, Reducer::kPopulationWeighted, zero).has_value());
}

TEST_CASE("spearman rank correlation") {
  Eigen::VectorXd x(5), y(5);
  x << 1, 2, 3, 4, 5;
  y << 2, 4, 6, 8, 10;
  CHECK(spearman(x, y) == 1.0);
  CHECK(spearman(x, -y) == -1.0);
  Eigen::VectorXd a(4), b(4);
  a << 1, 2, 3, 5;
  b << 2, 1, 4, 8;
  CHECK(spearman(a, b) == oracle::spearman_formula({1, 2, 3, 4}, {2, 1, 3, 4}));
  CHECK(spearman(a, b) == doctest::Approx(0.8));
  // Ties share average ranks.
  Eigen::VectorXd t(5), s(5);
  t << 1, 2, 2, 3, 4;
  s << 5, 3, 4, 2, 1;
  CHECK(spearman(t, s) == doctest::Approx(oracle::spearman_counting({1, 2, 2, 3, 4}, {5, 3, 4, 2, 1})).epsilon(1e-12));
  CHECK(average_ranks(t)[1] == 2.5);
  CHECK_THROWS_AS(spearman(Eigen::VectorXd::Ones(4), a), Error);
  CHECK_THROWS_AS(spearman(a.head(2), b.head(2)), Error);
  CHECK_THROWS_AS(spearman(a, b.head(3)), Error);
}
