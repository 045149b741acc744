#include <doctest.h>

#include <cmath>

#include "mtbo/radiomics.hpp"

using namespace mtbo;

namespace {

IntensityVolume make_volume(Dims d, const std::vector<double>& vals) {
  IntensityVolume v;
  v.dims = d;
  for (double x : vals) v.data.push_back(static_cast<float>(x));
  return v;
}

VoxelMask full_mask(Dims d) {
  VoxelMask m;
  m.dims = d;
  m.data.assign(d.count(), 1);
  return m;
}

// Frozen expected vectors from docs/feature_oracle_worksheet.md.
const std::array<double, kNumFeatures> kW1 = {
    1.5, 0.33333333333333331, 0, 1, 1.5, 1, 0.5, 2, 1, 0.38490017945975047,
    1.5811388300841898, 1, 0.5, 2.1666666666666665, 0.33333333333333331, 0,
    0.33333333333333331, 0.66666666666666663, -0.33333333333333393,
    0.91829583405448956, 0.22222222222222221, 0.66666666666666663,
    0.27777777777777779, 1.9182958340544893, 0.66666666666666663,
    -0.081704165945510443, 0.3882726567031789, 0.66666666666666663,
    0.86666666666666659, 0.77777777777777768, 0.66666666666666663,
    0.33333333333333331, 1.5, 1.2516291673878228, 0.33333333333333331, 0.25,
    25, 2.5, 1.1200000000000001, 2.7999999999999998, 0.69999999999999996,
    0.625, 50, 46.159999999999997, 12.5, 0.96999999999999997,
    2.4249999999999998, 0.60624999999999996};

const std::array<double, kNumFeatures> kW2 = {
    6, 3, 0.70710678118654746, 1.5, 5, 5, 1.3333333333333333, 8, 3,
    0.28867513459481287, 6.164414002968976, 0.91829583405448956,
    0.55555555555555558, 1.5, 0.0625, 0, 0.25, 0.5, -0.33333333333333331, 1,
    0.25, 0.5, 0.375, 1.5, 0.75, -0.15106563978903331, 0.46624404486561727,
    0.75, 0.89999999999999991, 0.83333333333333326, 0.5, 0.5, 1.25, 1, 0.25,
    0.1875, 20.894736842105264, 2.0263157894736841, 1.0789473684210527,
    2.1052631578947367, 0.82236842105263153, 0.74342105263157898, 38,
    36.05263157894737, 12.666666666666666, 0.98026315789473684,
    2.0065789473684212, 0.72368421052631582};

const std::array<double, kNumFeatures> kW3 = {
    5.1851851851851851, 10.541310541310541, 0.0029376092493371584,
    1.7385000000000002, 5, 0, 2.7846364883401922, 10, 10,
    0.62615670043590921, 6.0858061945018456, 1.9803464138951994,
    0.25651577503429351, 6.3924050632911396, 12.569406160220819,
    -0.13548218295104353, 2.2830075308444155, 2.9303797468354436,
    -0.12417497137851739, 1.928764243668164, 0.97392244832558883,
    1.3987341772151898, 0.065674571382791216, 3.9629572217464535,
    0.51318565400843885, -0.0096729089665689386, 0.19438924044407277,
    0.45379746835443041, 0.86551005212211474, 0.76642555756479813,
    0.46202531645569617, 0.085443037974683542, 2.5601265822784809,
    2.585223414650295, 2.2830075308444155, 1.3033468194199647,
    82.231250000000003, 7.6343750000000004, 1.3031250000000001,
    10.237500000000001, 0.45820312499999999, 0.36896701388888886, 320,
    266.91874999999999, 11.851851851851851, 0.93116319444444429,
    7.0703993055555561, 0.34726080246913577};

void check_against(const FeatureExtraction& got,
                   const std::array<double, kNumFeatures>& want) {
  REQUIRE(got.ok());
  for (int i = 0; i < kNumFeatures; ++i) {
    CAPTURE(feature_names()[static_cast<std::size_t>(i)]);
    CHECK(got.vec.values[static_cast<std::size_t>(i)] ==
          doctest::Approx(want[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

}  // namespace

TEST_CASE("feature names are fixed, unique, and ordered by family") {
  const auto& names = feature_names();
  CHECK(names.size() == 48);
  CHECK(names[0] == "mean");
  CHECK(names[12] == "uniformity");
  CHECK(names[13] == "glcm_autocorrelation");
  CHECK(names[35] == "glcm_variance");
  CHECK(names[36] == "glrlm_gln");
  CHECK(names[47] == "glrlm_srlge");
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j) CHECK(names[i] != names[j]);
}

TEST_CASE("worksheet case W1: 2x2x1") {
  const auto vol = make_volume({2, 2, 1}, {1, 2, 2, 1});
  check_against(extract_all(vol, full_mask({2, 2, 1}), {2, RangeRule::min_max()}), kW1);
}

TEST_CASE("worksheet case W2: 3x1x1") {
  const auto vol = make_volume({3, 1, 1}, {5, 5, 8});
  check_against(extract_all(vol, full_mask({3, 1, 1}), {2, RangeRule::min_max()}), kW2);
}

TEST_CASE("worksheet case W3: 3x3x3") {
  std::vector<double> vals(27);
  for (int i = 0; i < 27; ++i) vals[static_cast<std::size_t>(i)] = (i * 7 + 3) % 11;
  const auto vol = make_volume({3, 3, 3}, vals);
  check_against(extract_all(vol, full_mask({3, 3, 3}), {4, RangeRule::min_max()}), kW3);
}

TEST_CASE("direction offsets cover the 26-neighborhood half-set exactly once") {
  const auto& dirs = direction_offsets();
  REQUIRE(dirs.size() == 13);
  for (const auto& d : dirs) {
    const bool positive_half =
        d[2] > 0 || (d[2] == 0 && d[1] > 0) || (d[2] == 0 && d[1] == 0 && d[0] > 0);
    CHECK(positive_half);
    CHECK((d[0] != 0 || d[1] != 0 || d[2] != 0));
  }
  for (std::size_t i = 0; i < dirs.size(); ++i)
    for (std::size_t j = i + 1; j < dirs.size(); ++j) CHECK(dirs[i] != dirs[j]);
}

TEST_CASE("first-order degeneracies") {
  DiscretizedROI roi;
  roi.num_levels = 4;
  roi.levels = {1, 1, 1, 1};
  const std::vector<double> raw = {1.0, 1.0, 1.0, 1.0};
  const FirstOrderResult r = first_order_features(roi, raw);
  CHECK(r.values[0] == 1.0);  // mean
  CHECK(r.values[1] == 0.0);  // var
  CHECK(std::isnan(r.values[2]));
  CHECK(std::isnan(r.values[3]));
  CHECK(r.values[8] == 0.0);   // range
  CHECK(r.values[11] == 0.0);  // entropy of a single bin
  CHECK(r.values[12] == 1.0);  // uniformity
  CHECK(r.undefined == std::vector<std::string>{"skewness", "kurtosis"});
}

TEST_CASE("first-order entropy of a uniform 16-level histogram is 4 bits") {
  DiscretizedROI roi;
  roi.num_levels = 16;
  std::vector<double> raw;
  for (int l = 1; l <= 16; ++l) {
    roi.levels.push_back(static_cast<std::uint16_t>(l));
    raw.push_back(l);
  }
  const FirstOrderResult r = first_order_features(roi, raw);
  CHECK(r.values[11] == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(r.values[12] == doctest::Approx(1.0 / 16.0).epsilon(1e-14));
}

TEST_CASE("zero-mean data leaves cov undefined") {
  DiscretizedROI roi;
  roi.num_levels = 2;
  roi.levels = {1, 2};
  const FirstOrderResult r = first_order_features(roi, {-1.0, 1.0});
  CHECK(std::isnan(r.values[9]));
  CHECK(r.undefined == std::vector<std::string>{"cov"});
}

TEST_CASE("GLCM on tiny grids") {
  SUBCASE("two equal neighbors concentrate all mass at (1,1)") {
    LevelGrid g{{2, 1, 1}, {1, 1}, 2};
    const auto m = compute_glcm(g);
    CHECK(m.normalized(0, 0) == 1.0);
    CHECK(m.counts.sum() == 2.0);  // one pair counted symmetrically
  }
  SUBCASE("1-2-1 line splits mass between the off-diagonals") {
    LevelGrid g{{3, 1, 1}, {1, 2, 1}, 2};
    const auto m = compute_glcm(g);
    CHECK(m.normalized(0, 1) == 0.5);
    CHECK(m.normalized(1, 0) == 0.5);
    CHECK(m.normalized(0, 0) == 0.0);
  }
  SUBCASE("constant cube is all (1,1)") {
    LevelGrid g{{2, 2, 2}, {1, 1, 1, 1, 1, 1, 1, 1}, 2};
    const auto m = compute_glcm(g);
    CHECK(m.normalized(0, 0) == 1.0);
  }
  SUBCASE("matrix is symmetric and sums to one") {
    LevelGrid g{{3, 3, 1}, {1, 2, 3, 3, 1, 2, 2, 3, 1}, 3};
    const auto m = compute_glcm(g);
    CHECK(m.normalized.sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK((m.normalized - m.normalized.transpose()).norm() == 0.0);
  }
  SUBCASE("single masked voxel has no pairs") {
    LevelGrid g{{1, 1, 1}, {1}, 2};
    CHECK_THROWS_AS(compute_glcm(g), EmptyMatrix);
  }
}

TEST_CASE("GLCM features on pinned matrices") {
  SUBCASE("degenerate: all mass at one cell") {
    CooccurrenceMatrix m;
    m.counts = Eigen::MatrixXd::Zero(2, 2);
    m.counts(0, 0) = 4.0;
    m.normalized = m.counts / 4.0;
    const GLCMResult r = glcm_features(m);
    CHECK(r.values[9] == 1.0);   // energy
    CHECK(r.values[10] == 0.0);  // entropy
    CHECK(r.values[4] == 0.0);   // contrast
    CHECK(r.values[11] == 1.0);  // homogeneity
    CHECK(r.values[18] == 1.0);  // max probability
    CHECK(std::isnan(r.values[5]));  // correlation undefined, sigma^2 = 0
    CHECK(r.undefined == std::vector<std::string>{"glcm_correlation"});
  }
  SUBCASE("two levels, pure off-diagonal mass") {
    CooccurrenceMatrix m;
    m.normalized = Eigen::MatrixXd::Zero(2, 2);
    m.normalized(0, 1) = 0.5;
    m.normalized(1, 0) = 0.5;
    m.counts = 2.0 * m.normalized;
    const GLCMResult r = glcm_features(m);
    CHECK(r.values[4] == 1.0);   // contrast
    CHECK(r.values[9] == 0.5);   // energy
    CHECK(r.values[10] == 1.0);  // entropy: two cells at 1/2
    CHECK(r.values[5] == doctest::Approx(-1.0).epsilon(1e-12));  // anticorrelated
  }
}

TEST_CASE("GLRLM run decomposition") {
  SUBCASE("one line, one direction") {
    LevelGrid g{{4, 1, 1}, {1, 1, 2, 1}, 2};
    const auto m = compute_glrlm(g, {1, 0, 0});
    // runs: (1, len 2), (2, len 1), (1, len 1)
    CHECK(m.counts(0, 1) == 1.0);
    CHECK(m.counts(1, 0) == 1.0);
    CHECK(m.counts(0, 0) == 1.0);
    CHECK(m.num_runs() == 3.0);
  }
  SUBCASE("mask gaps break runs") {
    LevelGrid g{{4, 1, 1}, {1, 0, 1, 1}, 2};  // level 0 marks outside-ROI
    const auto m = compute_glrlm(g, {1, 0, 0});
    CHECK(m.counts(0, 0) == 1.0);
    CHECK(m.counts(0, 1) == 1.0);
    CHECK(m.num_runs() == 2.0);
  }
  SUBCASE("per-direction voxel accounting: run lengths sum to the voxel count") {
    LevelGrid g{{3, 3, 2},
                {1, 2, 2, 3, 1, 1, 2, 2, 2, 1, 1, 3, 3, 3, 2, 1, 2, 1},
                3};
    for (const auto& dir : direction_offsets()) {
      const auto m = compute_glrlm(g, dir);
      double voxels = 0.0;
      for (Eigen::Index i = 0; i < m.counts.rows(); ++i)
        for (Eigen::Index j = 0; j < m.counts.cols(); ++j)
          voxels += m.counts(i, j) * static_cast<double>(j + 1);
      CHECK(voxels == 18.0);
    }
  }
}

TEST_CASE("GLRLM features") {
  SUBCASE("two runs of lengths 1 and 2 at level 1") {
    RunLengthMatrix m;
    m.counts = Eigen::MatrixXd::Zero(1, 2);
    m.counts(0, 0) = 1.0;
    m.counts(0, 1) = 1.0;
    const auto v = glrlm_features(m, 3);
    CHECK(v[6] == 2.0);                                        // n_runs
    CHECK(v[9] == doctest::Approx(0.625).epsilon(1e-14));      // SRE
    CHECK(v[2] == doctest::Approx(2.5).epsilon(1e-14));        // LRE
    CHECK(v[8] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));  // RP
  }
}

TEST_CASE("features are invariant under a mirror flip of the volume") {
  std::vector<double> vals(27);
  for (int i = 0; i < 27; ++i) vals[static_cast<std::size_t>(i)] = (i * 5 + 2) % 13;
  const Dims d{3, 3, 3};
  const auto vol = make_volume(d, vals);

  IntensityVolume flipped;
  flipped.dims = d;
  flipped.data.resize(vol.data.size());
  for (int z = 0; z < 3; ++z)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x)
        flipped.data[static_cast<std::size_t>((2 - x) + 3 * (y + 3 * z))] =
            vol.at(x, y, z);

  const DiscretizationStrategy strat{4, RangeRule::min_max()};
  const auto a = extract_all(vol, full_mask(d), strat);
  const auto b = extract_all(flipped, full_mask(d), strat);
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  for (int i = 0; i < kNumFeatures; ++i) {
    if (i == 4) continue;  // median depends only on values, still equal, keep check
    CHECK(a.vec.values[static_cast<std::size_t>(i)] ==
          doctest::Approx(b.vec.values[static_cast<std::size_t>(i)]).epsilon(1e-10));
  }
}

TEST_CASE("strategies sharing a range rule agree on raw first-order statistics") {
  std::vector<double> vals(27);
  for (int i = 0; i < 27; ++i) vals[static_cast<std::size_t>(i)] = (i * 3 + 1) % 17;
  const Dims d{3, 3, 3};
  const auto vol = make_volume(d, vals);
  const auto mask = full_mask(d);

  const auto a = extract_all(vol, mask, {16, RangeRule::min_max()});
  const auto b = extract_all(vol, mask, {64, RangeRule::min_max()});
  // the first 11 features are raw-intensity statistics, independent of binning
  for (int i = 0; i < 11; ++i)
    CHECK(a.vec.values[static_cast<std::size_t>(i)] ==
          b.vec.values[static_cast<std::size_t>(i)]);
  // entropy depends on the bin count
  CHECK(a.vec.values[11] != b.vec.values[11]);
}
