#include <doctest.h>

#include <cmath>
#include <numeric>

#include "moedge/trace.hpp"

using namespace moedge;

namespace {

DemandTrace make_trace(const std::vector<long long>& cells,
                       const std::vector<std::vector<double>>& rows) {
  DemandTrace t;
  t.cells = cells;
  t.values.resize(static_cast<int>(rows.size()), static_cast<int>(cells.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cells.size(); ++c)
      t.values(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
  return t;
}

}  // namespace

TEST_CASE("ingest bins by summation and zero-fills") {
  // Three records of one cell inside one 10-minute bucket sum to 6.
  std::vector<RawActivityRecord> records{
      {7, 0, 1.0}, {7, 120000, 2.0}, {7, 540000, 3.0}};
  const DemandTrace t = ingest_records(records, 10);
  CHECK(t.num_cells() == 1);
  CHECK(t.num_steps() == 1);
  CHECK(t.at(0, 0) == doctest::Approx(6.0));

  // Two cells, two buckets, one record each: 2x2 matrix with two zeros.
  std::vector<RawActivityRecord> sparse{{1, 0, 4.0}, {2, 600000, 9.0}};
  const DemandTrace s = ingest_records(sparse, 10);
  CHECK(s.num_cells() == 2);
  CHECK(s.num_steps() == 2);
  CHECK(s.at(0, 0) == doctest::Approx(4.0));
  CHECK(s.at(1, 0) == doctest::Approx(0.0));
  CHECK(s.at(0, 1) == doctest::Approx(0.0));
  CHECK(s.at(1, 1) == doctest::Approx(9.0));
  CHECK(s.cells == std::vector<long long>{1, 2});
}

TEST_CASE("ingest rejects malformed and empty input") {
  CHECK(parse_activity_csv("", "t.csv").empty());
  CHECK_THROWS_AS(ingest_records({}, 10), ParseError);  // "no records"
  CHECK_THROWS_AS(parse_activity_csv("1,foo,3\n", "t.csv"), ParseError);
  CHECK_THROWS_AS(parse_activity_csv("1,0,-2\n", "t.csv"), ValidationError);
  CHECK_THROWS_AS(ingest_records({{1, 0, -1.0}}, 10), ValidationError);
  // Optional header row is skipped.
  const auto with_header =
      parse_activity_csv("cell_id,timestamp_ms,demand\n4,0,2.5\n", "t.csv");
  REQUIRE(with_header.size() == 1);
  CHECK(with_header[0].cell_id == 4);
}

TEST_CASE("merge_cells sums blocks and conserves demand") {
  // 4x4 grid of ones, merge factor 4 -> one cell of 16.
  std::vector<long long> ids(16);
  std::iota(ids.begin(), ids.end(), 0);
  DemandTrace t;
  t.cells = ids;
  t.values = Eigen::MatrixXd::Ones(3, 16);
  GridSpec grid{4, 4, 235.0};
  const DemandTrace merged = merge_cells(t, grid);
  CHECK(merged.num_cells() == 1);
  CHECK(merged.at(0, 0) == doctest::Approx(16.0));

  // merge_factor 1 is the identity.
  GridSpec identity{4, 1, 235.0};
  const DemandTrace same = merge_cells(t, identity);
  CHECK(same.num_cells() == 16);
  CHECK((same.values - t.values).norm() == doctest::Approx(0.0));

  // Sparse block: single demand 5 survives the merge.
  DemandTrace sparse = t;
  sparse.values.setZero();
  sparse.values(1, 9) = 5.0;
  const DemandTrace m2 = merge_cells(sparse, grid);
  CHECK(m2.at(1, 0) == doctest::Approx(5.0));

  // Per-step totals conserved on a random-ish trace.
  DemandTrace varied = t;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 16; ++c) varied.values(r, c) = 0.25 * (r + 1) * (c + 2);
  GridSpec half{4, 2, 235.0};
  const DemandTrace m3 = merge_cells(varied, half);
  CHECK(m3.num_cells() == 4);
  for (int r = 0; r < 3; ++r)
    CHECK(m3.values.row(r).sum() ==
          doctest::Approx(varied.values.row(r).sum()).epsilon(1e-9));

  GridSpec bad{5, 4, 235.0};
  CHECK_THROWS_AS(merge_cells(t, bad), ValidationError);
}

TEST_CASE("select_top_cells ranks by mean with lower-id ties") {
  const DemandTrace t = make_trace({0, 1, 2}, {{1, 5, 3}, {1, 5, 3}});
  const DemandTrace top = select_top_cells(t, 2);
  CHECK(top.cells == std::vector<long long>{1, 2});
  CHECK(top.at(0, 0) == doctest::Approx(5.0));
  CHECK(top.at(0, 1) == doctest::Approx(3.0));

  // k = all cells: identity.
  const DemandTrace all = select_top_cells(t, 3);
  CHECK(all.cells == t.cells);
  CHECK((all.values - t.values).norm() == doctest::Approx(0.0));

  // Tie at mean 5: lower id kept.
  const DemandTrace tie = make_trace({3, 9}, {{5, 5}});
  CHECK(select_top_cells(tie, 1).cells == std::vector<long long>{3});

  CHECK_THROWS_AS(select_top_cells(t, 4), ValidationError);
  CHECK_THROWS_AS(select_top_cells(t, 0), ValidationError);
}

TEST_CASE("split_dataset slices contiguously") {
  DemandTrace t;
  t.cells = {0};
  t.values.resize(100, 1);
  for (int i = 0; i < 100; ++i) t.values(i, 0) = i;
  auto [d1, d2, d3] = split_dataset(t, SplitSpec{50, 25, 25});
  CHECK(d1.num_steps() == 50);
  CHECK(d2.num_steps() == 25);
  CHECK(d3.num_steps() == 25);
  CHECK(d1.at(0, 0) == doctest::Approx(0.0));
  CHECK(d2.at(0, 0) == doctest::Approx(50.0));
  CHECK(d3.at(24, 0) == doctest::Approx(99.0));
  CHECK_THROWS_AS(split_dataset(t, SplitSpec{100, 0, 0}), ValidationError);
  CHECK_THROWS_AS(split_dataset(t, SplitSpec{50, 25, 30}), ValidationError);
}

TEST_CASE("synthetic profiles: frozen cases and determinism") {
  SyntheticProfile constant;
  constant.kind = SyntheticProfile::Kind::GaussianNoise;
  constant.base = 10.0;
  constant.noise_sd = 0.0;
  const DemandTrace c = generate_synthetic_trace(2, 5, constant, 1);
  CHECK((c.values.array() == 10.0).all());

  SyntheticProfile rotating;
  rotating.kind = SyntheticProfile::Kind::RotatingHotspot;
  rotating.base = 1.0;
  rotating.amplitude = 3.0;
  rotating.period_steps = 2;
  rotating.noise_sd = 0.0;
  const DemandTrace r = generate_synthetic_trace(2, 4, rotating, 1);
  // Period 2 over 2 cells: hotspot alternates each step.
  CHECK(r.at(0, 0) == doctest::Approx(4.0));
  CHECK(r.at(0, 1) == doctest::Approx(1.0));
  CHECK(r.at(1, 0) == doctest::Approx(1.0));
  CHECK(r.at(1, 1) == doctest::Approx(4.0));
  CHECK(r.at(2, 0) == doctest::Approx(4.0));

  SyntheticProfile noisy = constant;
  noisy.noise_sd = 1.5;
  const DemandTrace a = generate_synthetic_trace(3, 50, noisy, 42);
  const DemandTrace b = generate_synthetic_trace(3, 50, noisy, 42);
  CHECK((a.values - b.values).norm() == 0.0);
  CHECK((a.values.array() >= 0.0).all());
  const DemandTrace other = generate_synthetic_trace(3, 50, noisy, 43);
  CHECK((a.values - other.values).norm() > 0.0);

  CHECK(profile_kind_from_name("diurnal-sinusoid") ==
        SyntheticProfile::Kind::DiurnalSinusoid);
  CHECK(profile_kind_from_name("rotating-hotspot") ==
        SyntheticProfile::Kind::RotatingHotspot);
  CHECK(profile_kind_from_name("gaussian-noise-around-mean") ==
        SyntheticProfile::Kind::GaussianNoise);
  CHECK_THROWS_AS(profile_kind_from_name("bogus"), ValidationError);
}

TEST_CASE("normalizer min-max semantics and round trip") {
  const DemandTrace t = make_trace({0, 1}, {{0, 7}, {5, 7}, {10, 7}});
  const Normalizer norm = fit_normalizer(t);
  const DemandTrace n = norm.apply(t);
  CHECK(n.at(0, 0) == doctest::Approx(0.0));
  CHECK(n.at(1, 0) == doctest::Approx(0.5));
  CHECK(n.at(2, 0) == doctest::Approx(1.0));
  // Constant cell: scale 1, offset min -> all zeros.
  CHECK(n.at(0, 1) == doctest::Approx(0.0));
  CHECK(n.at(2, 1) == doctest::Approx(0.0));
  const DemandTrace back = norm.invert(n);
  CHECK((back.values - t.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("trace CSV round trip preserves values and cell ids") {
  const DemandTrace t = make_trace({3, 11}, {{1.25, 0.0}, {2.5, 1e-9}});
  const std::string csv = trace_to_csv(t);
  CHECK(csv.rfind("step,cell_3,cell_11", 0) == 0);
  const DemandTrace back = trace_from_csv(csv, 10, "round.csv");
  CHECK(back.cells == t.cells);
  CHECK((back.values - t.values).norm() == 0.0);

  CHECK_THROWS_AS(trace_from_csv("bogus\n1,2\n", 10, "x.csv"), ParseError);
  CHECK_THROWS_AS(trace_from_csv("step,cell_0\n0,-1\n", 10, "x.csv"),
                  ValidationError);
  // Normalized traces may carry small negatives when allowed explicitly.
  const DemandTrace neg =
      trace_from_csv("step,cell_0\n0,-0.25\n", 10, "x.csv", false);
  CHECK(neg.at(0, 0) == doctest::Approx(-0.25));
}
