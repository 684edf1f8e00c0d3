#include "acdkit/error.hpp"
#include "acdkit/raster.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cstdint>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <vector>

using namespace acdkit;
using testutil::TempDir;

namespace {

std::string le_bytes(const std::vector<float>& values) {
  std::string out;
  for (float v : values) {
    const auto w = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((w >> (8 * b)) & 0xff));
  }
  return out;
}

void write_r32(const TempDir& dir, const std::string& name, int w, int h, const std::string& payload,
               const std::string& magic = "R32") {
  testutil::write_bytes(dir / (name + ".json"),
                        "{\"magic\":\"" + magic + "\",\"width\":" + std::to_string(w) +
                            ",\"height\":" + std::to_string(h) +
                            ",\"dtype\":\"f32le\",\"order\":\"row-major\"}");
  testutil::write_bytes(dir / (name + ".r32"), payload);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(Raster, LoadsHandWrittenFile) {
  TempDir dir;
  write_r32(dir, "a", 2, 2, le_bytes({1, 2, 3, 4}));
  const auto r = load_raster(dir / "a");
  EXPECT_EQ(r.width(), 2);
  EXPECT_EQ(r.height(), 2);
  EXPECT_EQ(r(0, 0), 1.0f);
  EXPECT_EQ(r(0, 1), 2.0f);
  EXPECT_EQ(r(1, 0), 3.0f);
  EXPECT_EQ(r(1, 1), 4.0f);
  // Either file name resolves to the same raster.
  EXPECT_TRUE(load_raster(dir / "a.json").identical(r));
  EXPECT_TRUE(load_raster(dir / "a.r32").identical(r));
}

TEST(Raster, SaveWritesExactBytes) {
  TempDir dir;
  save_raster(Raster(2, 2, std::vector<float>{1, 2, 3, 4}), dir / "a");
  EXPECT_EQ(testutil::read_bytes(dir / "a.r32"), le_bytes({1, 2, 3, 4}));
}

TEST(Raster, ShortPayloadIsFormatError) {
  TempDir dir;
  write_r32(dir, "a", 2, 2, le_bytes({1, 2, 3}));
  EXPECT_EQ(kind_of([&] { load_raster(dir / "a"); }), ErrorKind::FormatError);
}

TEST(Raster, NonFiniteIsFormatError) {
  TempDir dir;
  write_r32(dir, "a", 2, 1, le_bytes({1, std::numeric_limits<float>::quiet_NaN()}));
  EXPECT_EQ(kind_of([&] { load_raster(dir / "a"); }), ErrorKind::FormatError);
  write_r32(dir, "b", 1, 1, le_bytes({std::numeric_limits<float>::infinity()}));
  EXPECT_EQ(kind_of([&] { load_raster(dir / "b"); }), ErrorKind::FormatError);
}

TEST(Raster, BadMagicIsFormatError) {
  TempDir dir;
  write_r32(dir, "a", 1, 1, le_bytes({1}), "R64");
  EXPECT_EQ(kind_of([&] { load_raster(dir / "a"); }), ErrorKind::FormatError);
  testutil::write_bytes(dir / "b.json", "not json");
  testutil::write_bytes(dir / "b.r32", le_bytes({1}));
  EXPECT_EQ(kind_of([&] { load_raster(dir / "b"); }), ErrorKind::FormatError);
}

TEST(Raster, MissingFileIsNotFound) {
  TempDir dir;
  EXPECT_EQ(kind_of([&] { load_raster(dir / "nope"); }), ErrorKind::NotFound);
}

TEST(Raster, SmallRoundTrips) {
  TempDir dir;
  const Raster one(1, 1, std::vector<float>{0.0f});
  save_raster(one, dir / "one");
  EXPECT_TRUE(load_raster(dir / "one").identical(one));
  const Raster zeros(3, 2);
  save_raster(zeros, dir / "zeros");
  const auto back = load_raster(dir / "zeros");
  EXPECT_EQ(back.width(), 3);
  EXPECT_EQ(back.height(), 2);
  EXPECT_TRUE(back.identical(zeros));
}

TEST(Raster, UnwritableDirectoryIsIoError) {
  TempDir dir;
  EXPECT_EQ(kind_of([&] { save_raster(Raster(1, 1), dir / "missing" / "sub" / "a"); }),
            ErrorKind::IoError);
}

TEST(Raster, RoundTripPropertyPreservesBits) {
  TempDir dir;
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 25; ++trial) {
    const int w = 1 + static_cast<int>(gen() % 17), h = 1 + static_cast<int>(gen() % 13);
    std::vector<float> data(static_cast<std::size_t>(w * h));
    for (auto& v : data) {
      // Random finite bit patterns, including subnormals and negative zero.
      float f;
      do {
        f = std::bit_cast<float>(static_cast<std::uint32_t>(gen()));
      } while (!std::isfinite(f));
      v = f;
    }
    const Raster r(w, h, data);
    save_raster(r, dir / "p");
    EXPECT_TRUE(load_raster(dir / "p").identical(r)) << "trial " << trial;
  }
}

TEST(Raster, MakePairChecksDims) {
  const Raster a(2, 2), b(2, 2), c(3, 2);
  EXPECT_NO_THROW(acdkit::make_pair(a, b));
  EXPECT_EQ(kind_of([&] { acdkit::make_pair(a, c); }), ErrorKind::DimensionMismatch);
  const Raster r(2, 1, std::vector<float>{5, 6});
  const auto pair = acdkit::make_pair(r, r);
  EXPECT_TRUE(pair.t0.identical(pair.t1));
}

TEST(GroundTruth, SingleMaskIsUsedForBoth) {
  TempDir dir;
  Mask m = Mask::Zero(2, 3);
  m(1, 2) = true;
  save_mask(m, dir / "m");
  const auto gt = load_ground_truth(dir / "m", std::nullopt, {3, 2});
  EXPECT_TRUE((gt.inner() == m).all());
  EXPECT_TRUE((gt.outer() == m).all());
  const auto same = load_ground_truth(dir / "m", dir / "m", {3, 2});
  EXPECT_TRUE((same.inner() == same.outer()).all());
}

TEST(GroundTruth, InnerOutsideOuterIsRejected) {
  TempDir dir;
  Mask inner = Mask::Zero(2, 2), outer = Mask::Zero(2, 2);
  inner(0, 0) = true;
  outer(1, 1) = true;
  save_mask(inner, dir / "inner");
  save_mask(outer, dir / "outer");
  EXPECT_EQ(kind_of([&] { load_ground_truth(dir / "inner", dir / "outer", {2, 2}); }),
            ErrorKind::MaskInconsistent);
}

TEST(GroundTruth, WrongGridIsDimensionMismatch) {
  TempDir dir;
  save_mask(Mask::Zero(2, 2), dir / "m");
  EXPECT_EQ(kind_of([&] { load_ground_truth(dir / "m", std::nullopt, {3, 2}); }),
            ErrorKind::DimensionMismatch);
}

TEST(GroundTruth, NonBinaryMaskIsFormatError) {
  TempDir dir;
  save_raster(Raster(2, 1, std::vector<float>{0.0f, 0.5f}), dir / "m");
  EXPECT_EQ(kind_of([&] { load_mask(dir / "m"); }), ErrorKind::FormatError);
}

TEST(GroundTruth, AcceptsExactlyTheSubsetRelation) {
  std::mt19937_64 gen(11);
  int accepted = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int w = 1 + static_cast<int>(gen() % 4), h = 1 + static_cast<int>(gen() % 3);
    Mask inner(h, w), outer(h, w);
    for (Eigen::Index i = 0; i < inner.size(); ++i) {
      inner.data()[i] = gen() % 3 == 0;
      outer.data()[i] = gen() % 2 == 0;
    }
    bool subset = true;
    for (Eigen::Index i = 0; i < inner.size(); ++i) {
      if (inner.data()[i] && !outer.data()[i]) subset = false;
    }
    bool ok = true;
    try {
      GroundTruth gt(inner, outer);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::MaskInconsistent);
      ok = false;
    }
    EXPECT_EQ(ok, subset);
    accepted += ok;
  }
  EXPECT_GT(accepted, 0);
  EXPECT_LT(accepted, 500);
}
