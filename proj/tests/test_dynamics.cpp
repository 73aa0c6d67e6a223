#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "pacorn/dynamics.hpp"
#include "support.hpp"

using namespace pacorn;
using pacorn::testing::random_instance;

namespace {

Instance box_instance(double w, double h) { return Instance("box", {{0, 0}, {w, 0}, {w, h}, {0, h}, {w / 2, h / 3}}); }

DynamicsConfig dyn_config(const Instance& inst, std::uint64_t seed = 1) {
  DynamicsConfig cfg;
  cfg.rad = compute_rad(inst);
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(ComputeRad, Examples) {
  EXPECT_DOUBLE_EQ(compute_rad(box_instance(100, 60)), 8.0);
  EXPECT_DOUBLE_EQ(compute_rad(box_instance(10, 10)), 1.0);
}

TEST(ComputeRad, DegenerateInstanceRejected) {
  const Instance same("same", {{2, 2}, {2, 2}, {2, 2}});
  EXPECT_THROW(compute_rad(same), std::invalid_argument);
}

TEST(ComputeRad, MatchesIndependentScanOfFile) {
  std::ifstream in(pacorn::testing::data_path("pcb442.tsp"));
  std::string line;
  while (std::getline(in, line) && line.find("NODE_COORD_SECTION") == std::string::npos) {
  }
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    int idx;
    double x, y;
    if (!(row >> idx >> x >> y)) break;
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  const Instance inst = load_tsplib(pacorn::testing::data_path("pcb442.tsp"));
  EXPECT_DOUBLE_EQ(compute_rad(inst), 0.1 * ((xmax - xmin) + (ymax - ymin)) / 2.0);
}

TEST(ComputeRad, FrozenAfterMoves) {
  Instance inst = random_instance(30, 2);
  const double rad = compute_rad(inst);
  Rng rng(3);
  DynamicsConfig cfg = dyn_config(inst);
  cfg.rad = 200.0;  // large jumps, likely to leave the box
  for (int c = 0; c < 20; ++c) perturb_instance(inst, cfg, c, rng);
  EXPECT_EQ(compute_rad(inst), rad);
}

TEST(RingSample, ContainmentAndAreaRatio) {
  Rng rng(2024);
  const double rad = 9.0;
  const int draws = 100000;
  int inside_six = 0;
  for (int i = 0; i < draws; ++i) {
    const Point c{static_cast<double>(i % 97), static_cast<double>(i % 89)};
    const Point p = sample_ring_point(c, rad, rng);
    const double r = std::hypot(p.x - c.x, p.y - c.y);
    ASSERT_GE(r, 3.0);
    ASSERT_LE(r, 9.0);
    if (r <= 6.0) ++inside_six;
  }
  // (36 - 9) / (81 - 9)
  const double p = 0.375;
  const double sigma = std::sqrt(draws * p * (1 - p));
  EXPECT_LE(std::abs(inside_six - draws * p), 3 * sigma);
}

TEST(RingSample, AnglesCoverAllQuadrants) {
  Rng rng(5);
  std::array<int, 4> quadrant{};
  for (int i = 0; i < 40000; ++i) {
    const Point p = sample_ring_point({0, 0}, 1.0, rng);
    ++quadrant[static_cast<std::size_t>((p.x >= 0 ? 0 : 1) + (p.y >= 0 ? 0 : 2))];
  }
  for (int q : quadrant) EXPECT_NEAR(q, 10000, 3 * std::sqrt(40000 * 0.25 * 0.75));
}

TEST(RingSample, FixedSeedRepeats) {
  Rng a(7), b(7);
  EXPECT_EQ(sample_ring_point({1, 2}, 5, a), sample_ring_point({1, 2}, 5, b));
}

TEST(RingSample, NonPositiveRadiusRejected) {
  Rng rng(1);
  EXPECT_THROW(sample_ring_point({0, 0}, 0.0, rng), std::invalid_argument);
}

TEST(DynamicsConfigValidation, Bounds) {
  DynamicsConfig c;
  c.rad = 1.0;
  c.interval_mod = 3;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.interval_mod = 4;
  EXPECT_NO_THROW(c.validate());
  c.rad = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Perturb, MovesExactlyOneCityIntoTheRing) {
  Instance inst = random_instance(50, 1);
  const Instance before = inst;
  const DynamicsConfig cfg = dyn_config(inst);
  Rng rng(4);
  const CityMove m = perturb_instance(inst, cfg, 0, rng);
  EXPECT_EQ(m.old_pos, before.coord(m.city));
  EXPECT_EQ(inst.coord(m.city), m.new_pos);
  const double r = std::hypot(m.new_pos.x - m.old_pos.x, m.new_pos.y - m.old_pos.y);
  EXPECT_GE(r, cfg.rad / 3);
  EXPECT_LE(r, cfg.rad);
  for (City c = 0; c < 50; ++c) {
    if (c != m.city) {
      EXPECT_EQ(inst.coord(c), before.coord(c));
    }
    EXPECT_EQ(inst.distance(m.city, c), pacorn::testing::naive_distance(inst.coord(m.city), inst.coord(c)));
  }
  EXPECT_EQ(inst.last_move_cycle(), 0);
}

TEST(Perturb, DisabledDynamicsRejected) {
  Instance inst = random_instance(10, 1);
  DynamicsConfig cfg = dyn_config(inst);
  cfg.enabled = false;
  Rng rng(1);
  EXPECT_THROW(perturb_instance(inst, cfg, 0, rng), IllegalState);
}

TEST(Perturb, RepairedListsEqualFullRebuild) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const int n = 10 + static_cast<int>(seed * 15);
    const int k = std::min(n - 1, 3 + static_cast<int>(seed % 8));
    Instance inst = random_instance(n, seed, 100.0, k);
    DynamicsConfig cfg = dyn_config(inst, seed);
    if (seed % 2) cfg.rad *= 5;
    Rng rng(seed);
    for (int c = 0; c < 60; ++c) {
      perturb_instance(inst, cfg, c, rng);
      ASSERT_EQ(inst.neighbor_lists(), build_neighbor_lists(inst, k)) << "seed " << seed << " cycle " << c;
    }
  }
}

TEST(Perturb, RepairHandlesTiesOnIntegerGrid) {
  std::vector<Point> pts;
  for (int x = 0; x < 6; ++x)
    for (int y = 0; y < 6; ++y) pts.push_back({double(x), double(y)});
  Instance inst("grid", pts, 6);
  Rng rng(9);
  for (int c = 0; c < 200; ++c) {
    CityMove m;
    m.cycle = c;
    m.city = static_cast<City>(rng() % 36);
    m.old_pos = inst.coord(m.city);
    m.new_pos = {double(rng() % 7), double(rng() % 7)};
    apply_move(inst, m);
    ASSERT_EQ(inst.neighbor_lists(), build_neighbor_lists(inst, 6)) << "cycle " << c;
  }
}

TEST(Perturb, CachedDistancesFollowMoves) {
  Instance inst = random_instance(40, 3);
  inst.enable_distance_cache();
  const DynamicsConfig cfg = dyn_config(inst);
  Rng rng(3);
  for (int c = 0; c < 30; ++c) perturb_instance(inst, cfg, c, rng);
  for (City i = 0; i < 40; ++i)
    for (City j = 0; j < 40; ++j)
      ASSERT_EQ(inst.distance(i, j), pacorn::testing::naive_distance(inst.coord(i), inst.coord(j)));
}

TEST(ApplyMove, ReplicaMatchesMaster) {
  Instance master = random_instance(80, 5);
  Instance replica = master;
  const DynamicsConfig cfg = dyn_config(master);
  Rng rng(11);
  for (int c = 0; c < 40; ++c) {
    const CityMove m = perturb_instance(master, cfg, c, rng);
    apply_move(replica, m);
    ASSERT_TRUE(replica == master);
  }
}

TEST(ApplyMove, SameMoveTwiceKeepsSingleApplicationState) {
  Instance inst = random_instance(20, 5);
  Instance reference = inst;
  const DynamicsConfig cfg = dyn_config(inst);
  Rng rng(1);
  const CityMove m = perturb_instance(reference, cfg, 3, rng);
  apply_move(inst, m);
  EXPECT_THROW(apply_move(inst, m), StaleMove);
  EXPECT_TRUE(inst == reference);
}

TEST(ApplyMove, OlderMoveRejectedStateUnchanged) {
  Instance inst = random_instance(20, 5);
  const DynamicsConfig cfg = dyn_config(inst);
  Rng rng(1);
  Instance scratch = inst;
  const CityMove older = perturb_instance(scratch, cfg, 1, rng);
  const CityMove newer = perturb_instance(scratch, cfg, 2, rng);
  apply_move(inst, newer);
  const Instance snapshot = inst;
  EXPECT_THROW(apply_move(inst, older), StaleMove);
  EXPECT_TRUE(inst == snapshot);
}

TEST(ApplyMove, UnknownCityRejected) {
  Instance inst = random_instance(10, 5);
  CityMove m;
  m.city = 10;
  EXPECT_THROW(apply_move(inst, m), std::invalid_argument);
}

TEST(Reevaluate, UnchangedWithoutMove) {
  const Instance inst = random_instance(20, 5);
  const Tour t = make_tour(inst, nearest_neighbor_tour(inst).order);
  EXPECT_EQ(reevaluate_tour(inst, t), t);
}

TEST(Reevaluate, SubRoundingMoveKeepsLength) {
  Instance inst("grid", {{0, 0}, {10, 0}, {10, 10}, {0, 10}, {5, 20}});
  const Tour t = make_tour(inst, {0, 1, 2, 4, 3});
  apply_move(inst, CityMove{0, 4, {5, 20}, {5.01, 20.01}});
  EXPECT_EQ(reevaluate_tour(inst, t).length, t.length);
}

TEST(Reevaluate, MatchesScratchLengthAfterMoves) {
  Instance inst = random_instance(60, 6);
  const DynamicsConfig cfg = dyn_config(inst);
  Rng rng(6);
  std::mt19937_64 orders(6);
  for (int c = 0; c < 10; ++c) {
    perturb_instance(inst, cfg, c, rng);
    for (int i = 0; i < 100; ++i) {
      Tour t{pacorn::testing::random_order(60, orders), 0};
      ASSERT_EQ(reevaluate_tour(inst, t).length, pacorn::testing::naive_length(inst, t.order));
    }
  }
  EXPECT_THROW(reevaluate_tour(inst, Tour{{0, 1, 2}, 0}), NotAPermutation);
}

TEST(MoveStreamTest, SameSeedSameMoves) {
  Instance a = random_instance(30, 7), b = a;
  MoveStream sa(dyn_config(a, 5)), sb(dyn_config(b, 5));
  for (int c = 0; c < 25; ++c) ASSERT_EQ(sa.next(a, c), sb.next(b, c));
}

TEST(MoveLog, FormatParseRoundTrip) {
  Instance inst = random_instance(30, 7);
  MoveStream s(dyn_config(inst));
  for (int c = 0; c < 25; ++c) {
    const CityMove m = s.next(inst, c);
    ASSERT_EQ(parse_move(format_move(m)), m);
  }
  EXPECT_THROW(parse_move("1;2;3"), std::invalid_argument);
}
