#include "doctest.h"

#include "liflab/dataset.hpp"

using namespace liflab;

TEST_CASE("sparse frames round-trip through dense, counts included") {
  Matrix m = Matrix::Zero(3, 4);
  m(0, 1) = 1;
  m(2, 3) = 3;
  m(2, 0) = 1;
  const auto s = SparseFrames::from_dense(m);
  CHECK(s.steps() == 3);
  CHECK(s.width == 4);
  CHECK(s.total_active() == 5);
  CHECK(s.active[1].empty());
  CHECK(s.to_dense() == m);
}

TEST_CASE("batch pads, truncates and mixes sample kinds") {
  Dataset d;
  d.width = 2;
  d.num_classes = 3;
  Matrix a(2, 2);
  a << 1, 0, 0, 1;
  d.samples.push_back({SparseFrames::from_dense(a), 0});
  Vector v(2);
  v << 0.25, -1.0;
  d.samples.push_back({StaticCurrent{v, 4}, 2});
  CHECK(d.max_steps() == 4);
  CHECK_NOTHROW(d.validate());

  const std::vector<std::size_t> idx{1, 0};
  const auto seq = d.batch(idx);
  REQUIRE(seq.steps() == 4);
  CHECK(seq.batch() == 2);
  for (int t = 0; t < 4; ++t) CHECK(seq[t].col(0) == v);
  CHECK(seq[0](0, 1) == 1.0);
  CHECK(seq[1](1, 1) == 1.0);
  CHECK(seq[2].col(1).isZero());
  CHECK(seq[3].col(1).isZero());
  CHECK(d.labels(idx) == std::vector<int>{2, 0});

  const auto cut = d.batch(idx, 1);
  CHECK(cut.steps() == 1);
  CHECK(cut[0](1, 1) == 0.0);
}

TEST_CASE("validate flags bad widths and labels") {
  Dataset d;
  d.width = 3;
  d.num_classes = 2;
  d.samples.push_back({StaticCurrent{Vector::Zero(3), 1}, 1});
  CHECK_NOTHROW(d.validate());
  d.samples.push_back({StaticCurrent{Vector::Zero(2), 1}, 0});
  CHECK_THROWS_AS(d.validate(), DimensionError);
  d.samples.back() = {StaticCurrent{Vector::Zero(3), 1}, 2};
  CHECK_THROWS_AS(d.validate(), DimensionError);
  CHECK(iota_indices(3) == std::vector<std::size_t>{0, 1, 2});
}
