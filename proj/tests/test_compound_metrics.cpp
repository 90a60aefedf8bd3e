#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "octrasl/compound.hpp"
#include "octrasl/metrics.hpp"
#include "support.hpp"

using namespace octrasl;
using octrasl::testing::TempDir;

namespace {

Matrix single_pixel(std::initializer_list<double> values) {
  Matrix m(1, static_cast<Index>(values.size()));
  Index k = 0;
  for (double v : values) m(0, k++) = v;
  return m;
}

// A 1x1 frame is below the image minimum, so pad to 2x2 with copies.
Image compound_one(std::initializer_list<double> values, CompoundMethod method) {
  const Matrix row = single_pixel(values);
  Matrix m(4, row.cols());
  for (Index p = 0; p < 4; ++p) m.row(p) = row;
  return compound(m, method, Frame{2, 2});
}

Image noise_image(int w, int h, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(w, h);
  for (double& v : img.values()) v = u(rng);
  return img;
}

}  // namespace

TEST_CASE("compound examples") {
  CHECK(compound_one({1, 2, 100}, CompoundMethod::median)(0, 0) == 2.0);
  CHECK(compound_one({1, 2, 3, 4}, CompoundMethod::median)(0, 0) == 2.5);
  CHECK(compound_one({1, 2, 3, 4}, CompoundMethod::mean)(0, 0) == 2.5);
  CHECK(compound_one({4, 1, 3, 2}, CompoundMethod::median)(0, 0) == 2.5);
}

TEST_CASE("compounding identical columns returns that column") {
  std::mt19937_64 rng(1);
  const Vector col = octrasl::testing::random_matrix(12, 1, rng);
  const Matrix m = col.replicate(1, 5);
  for (auto method : {CompoundMethod::median, CompoundMethod::mean}) {
    const Image out = compound(m, method, Frame{4, 3});
    CHECK((out.vec() - col).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("median ignores column order and stays within range") {
  std::mt19937_64 rng(2);
  const Matrix m = octrasl::testing::random_matrix(30, 7, rng);
  std::vector<Index> order{0, 1, 2, 3, 4, 5, 6};
  std::shuffle(order.begin(), order.end(), rng);
  Matrix permuted(30, 7);
  for (Index k = 0; k < 7; ++k) permuted.col(k) = m.col(order[static_cast<std::size_t>(k)]);
  const Image a = compound(m, CompoundMethod::median, Frame{6, 5});
  const Image b = compound(permuted, CompoundMethod::median, Frame{6, 5});
  CHECK(a == b);
  for (Index p = 0; p < 30; ++p) {
    CHECK(a.vec()(p) >= m.row(p).minCoeff());
    CHECK(a.vec()(p) <= m.row(p).maxCoeff());
  }
}

TEST_CASE("compound respects the validity matrix") {
  Matrix m(4, 3);
  m << 1, 2, 50,  //
      1, 2, 50,   //
      1, 2, 50,   //
      1, 2, 50;
  ValidityMatrix valid = ValidityMatrix::Constant(4, 3, true);
  valid(0, 2) = false;
  valid(1, 0) = false;
  valid(1, 1) = false;
  const Image med = compound(m, CompoundMethod::median, valid, Frame{2, 2});
  CHECK(med(0, 0) == 1.5);
  CHECK(med(1, 0) == 50.0);
  CHECK(med(0, 1) == 2.0);
  const Image mean = compound(m, CompoundMethod::mean, valid, Frame{2, 2});
  CHECK(mean(0, 0) == 1.5);
  CHECK(mean(0, 1) == doctest::Approx(53.0 / 3.0));
}

TEST_CASE("compound error paths") {
  const Matrix m = Matrix::Ones(4, 2);
  ValidityMatrix valid = ValidityMatrix::Constant(4, 2, true);
  valid.row(3).setConstant(false);
  try {
    compound(m, CompoundMethod::median, valid, Frame{2, 2});
    FAIL("expected masked-pixel");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::masked_pixel);
  }
  CHECK_THROWS_AS(compound(m, CompoundMethod::mean, Frame{3, 2}), Error);
  CHECK_THROWS_AS(compound(Matrix(4, 0), CompoundMethod::mean, Frame{2, 2}), Error);
  CHECK(parse_compound_method("median") == CompoundMethod::median);
  CHECK(parse_compound_method(to_string(CompoundMethod::mean)) == CompoundMethod::mean);
  CHECK_THROWS_AS(parse_compound_method("mode"), Error);
}

TEST_CASE("mean compounding reduces noise std by sqrt(n)") {
  const int pixels = 20000;
  const double sigma = 0.1;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, sigma);
  for (int n : {4, 16}) {
    Matrix m(pixels, n);
    for (Index j = 0; j < n; ++j)
      for (Index p = 0; p < pixels; ++p) m(p, j) = 0.4 + noise(rng);
    const Image out = compound(m, CompoundMethod::mean, Frame{200, 100});
    const RoiStats st = roi_stats(out, Roi{RoiKind::background, 0, 0, 200, 100});
    CHECK(std::abs(st.std / (sigma / std::sqrt(n)) - 1.0) < 0.1);
  }
}

TEST_CASE("roi_stats examples") {
  const RoiStats c = roi_stats(Image(5, 5, 7.0), Roi{RoiKind::feature, 1, 1, 3, 3});
  CHECK(c.mean == 7.0);
  CHECK(c.std == 0.0);
  Image two(4, 2, 0.0);
  two(1, 0) = 0.0;
  two(2, 0) = 2.0;
  const RoiStats t = roi_stats(two, Roi{RoiKind::feature, 1, 0, 2, 1});
  CHECK(t.mean == 1.0);
  CHECK(t.std == 1.0);
  const RoiStats u = roi_stats(noise_image(200, 200, 3, 0.0, 1.0), Roi{RoiKind::background, 0, 0, 200, 200});
  CHECK(std::abs(u.mean - 0.5) < 0.01);
  CHECK(std::abs(u.std - 1.0 / std::sqrt(12.0)) < 0.01);
}

TEST_CASE("roi_stats rejects bad ROIs") {
  const Image img(6, 6, 1.0);
  for (const Roi& r : {Roi{RoiKind::feature, 0, 0, 0, 3}, Roi{RoiKind::feature, 0, 0, 3, -1},
                       Roi{RoiKind::feature, 4, 4, 3, 3}, Roi{RoiKind::feature, -1, 0, 2, 2}}) {
    try {
      roi_stats(img, r);
      FAIL("expected invalid-roi");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::invalid_roi);
    }
  }
}

TEST_CASE("evaluate formula examples") {
  // Background alternates 90/110: mean 100, std 10. A feature of mean 100 is 20 dB.
  Image img(8, 4, 0.0);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 4; ++x) img(x, y) = (x + y) % 2 == 0 ? 90.0 : 110.0;
  for (int y = 2; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img(x, y) = 100.0;  // same mean as the background
  for (int y = 0; y < 4; ++y)
    for (int x = 4; x < 8; ++x) img(x, y) = 100.0 + 10.0 * std::sqrt(2.0) + ((x + y) % 2 == 0 ? -10.0 : 10.0);
  const std::vector<Roi> rois{
      {RoiKind::background, 0, 0, 4, 2},
      {RoiKind::feature, 0, 2, 4, 2},
      {RoiKind::feature, 4, 0, 4, 4},
  };
  const MetricReport r = evaluate(img, rois);
  REQUIRE(r.snr.size() == 2);
  CHECK(r.background.mean == doctest::Approx(100.0));
  CHECK(r.background.std == doctest::Approx(10.0));
  CHECK(r.snr[0] == doctest::Approx(20.0));
  CHECK(r.cnr[0] == doctest::Approx(0.0).epsilon(1e-12));
  // Contrast equal to sqrt(sigma_m^2 + sigma_b^2) gives CNR 1.
  CHECK(r.cnr[1] == doctest::Approx(1.0));
  CHECK(r.avg_snr == doctest::Approx(0.5 * (r.snr[0] + r.snr[1])));
  CHECK(r.avg_cnr == doctest::Approx(0.5 * (r.cnr[0] + r.cnr[1])));
}

TEST_CASE("metrics are invariant to positive scaling") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Image img = noise_image(32, 32, seed, 0.1, 1.0);
    const std::vector<Roi> rois{{RoiKind::background, 0, 0, 10, 10},
                                {RoiKind::feature, 12, 12, 8, 8},
                                {RoiKind::feature, 20, 2, 6, 9}};
    const double k = 0.01 + 10.0 * static_cast<double>(seed) / 20.0;
    Image scaled = img;
    for (double& v : scaled.values()) v *= k;
    const MetricReport a = evaluate(img, rois);
    const MetricReport b = evaluate(scaled, rois);
    for (std::size_t m = 0; m < a.snr.size(); ++m) {
      CHECK(std::abs(a.snr[m] - b.snr[m]) < 1e-9);
      CHECK(std::abs(a.cnr[m] - b.cnr[m]) < 1e-9);
    }
  }
}

TEST_CASE("adding a constant raises SNR and keeps CNR") {
  const Image img = noise_image(32, 32, 4, 0.1, 1.0);
  const std::vector<Roi> rois{{RoiKind::background, 0, 0, 10, 10}, {RoiKind::feature, 12, 12, 8, 8}};
  Image shifted = img;
  for (double& v : shifted.values()) v += 0.5;
  const MetricReport a = evaluate(img, rois);
  const MetricReport b = evaluate(shifted, rois);
  CHECK(b.snr[0] > a.snr[0]);
  CHECK(b.cnr[0] == doctest::Approx(a.cnr[0]));
}

TEST_CASE("reordering feature ROIs permutes the per-ROI lists") {
  const Image img = noise_image(32, 32, 6, 0.1, 1.0);
  const Roi bg{RoiKind::background, 0, 0, 10, 10};
  const Roi f1{RoiKind::feature, 12, 12, 8, 8};
  const Roi f2{RoiKind::feature, 20, 2, 6, 9};
  const MetricReport a = evaluate(img, std::vector<Roi>{bg, f1, f2});
  const MetricReport b = evaluate(img, std::vector<Roi>{f2, bg, f1});
  CHECK(a.snr[0] == b.snr[1]);
  CHECK(a.snr[1] == b.snr[0]);
  CHECK(a.avg_snr == doctest::Approx(b.avg_snr));
  CHECK(a.avg_cnr == doctest::Approx(b.avg_cnr));
}

TEST_CASE("evaluate error paths") {
  const Image img = noise_image(16, 16, 7, 0.1, 1.0);
  const Roi bg{RoiKind::background, 0, 0, 4, 4};
  const Roi f{RoiKind::feature, 8, 8, 4, 4};
  auto kind = [&](const std::vector<Roi>& rois, const Image& im) {
    try {
      evaluate(im, rois);
    } catch (const Error& e) {
      return e.kind();
    }
    FAIL("no error");
    return ErrorKind::io;
  };
  CHECK(kind({f}, img) == ErrorKind::invalid_roi);
  CHECK(kind({bg}, img) == ErrorKind::invalid_roi);
  CHECK(kind({bg, bg, f}, img) == ErrorKind::invalid_roi);
  CHECK(kind({bg, Roi{RoiKind::feature, 0, 8, 1, 3}}, img) == ErrorKind::invalid_roi);
  Image flat_bg = img;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) flat_bg(x, y) = 0.3;
  CHECK(kind({bg, f}, flat_bg) == ErrorKind::degenerate_background);
  Image dark = img;
  for (int y = 8; y < 12; ++y)
    for (int x = 8; x < 12; ++x) dark(x, y) = -0.2;
  CHECK(kind({bg, f}, dark) == ErrorKind::undefined_snr);
}

TEST_CASE("ROI files round trip") {
  std::istringstream in("# layout\nbackground 1 2 30 4\n\nfeature 5 6 7 8  # trailing\n");
  const std::vector<Roi> rois = parse_rois(in);
  REQUIRE(rois.size() == 2);
  CHECK(rois[0] == Roi{RoiKind::background, 1, 2, 30, 4});
  CHECK(rois[1] == Roi{RoiKind::feature, 5, 6, 7, 8});
  TempDir dir("rois");
  write_rois(dir.path / "r.txt", rois);
  CHECK(read_rois(dir.path / "r.txt") == rois);
  std::istringstream bad("feature 1 2 3\n");
  CHECK_THROWS_AS(parse_rois(bad), Error);
  std::istringstream unknown("vessel 1 2 3 4\n");
  CHECK_THROWS_AS(parse_rois(unknown), Error);
  CHECK_THROWS_AS(read_rois(dir.path / "missing.txt"), Error);
}
