#include "mtbo/radiomics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mtbo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// 0*log2(0) = 0 convention
double plog2(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

}  // namespace

const std::array<std::string, kNumFeatures>& feature_names() {
  static const std::array<std::string, kNumFeatures> names = {
      // first-order
      "mean", "var", "skewness", "kurtosis", "median", "min", "mad", "max", "range",
      "cov", "rms", "entropy", "uniformity",
      // GLCM
      "glcm_autocorrelation", "glcm_cluster_prominence", "glcm_cluster_shade",
      "glcm_cluster_tendency", "glcm_contrast", "glcm_correlation",
      "glcm_difference_entropy", "glcm_difference_variance", "glcm_dissimilarity",
      "glcm_energy", "glcm_entropy", "glcm_homogeneity", "glcm_imc1", "glcm_imc2",
      "glcm_idm", "glcm_idmn", "glcm_idn", "glcm_inverse_variance",
      "glcm_max_probability", "glcm_mean", "glcm_sum_entropy", "glcm_sum_variance",
      "glcm_variance",
      // GLRLM
      "glrlm_gln", "glrlm_hgre", "glrlm_lre", "glrlm_lrhge", "glrlm_lrlge",
      "glrlm_lgre", "glrlm_n_runs", "glrlm_rln", "glrlm_rp", "glrlm_sre",
      "glrlm_srhge", "glrlm_srlge"};
  return names;
}

LevelGrid embed_levels(const DiscretizedROI& roi, const VoxelMask& mask) {
  LevelGrid grid;
  grid.dims = mask.dims;
  grid.num_levels = roi.num_levels;
  grid.levels.assign(mask.dims.count(), 0);
  std::size_t next = 0;
  std::size_t idx = 0;
  for (int z = 0; z < mask.dims.z; ++z)
    for (int y = 0; y < mask.dims.y; ++y)
      for (int x = 0; x < mask.dims.x; ++x, ++idx)
        if (mask.data[idx] != 0) grid.levels[idx] = roi.levels[next++];
  return grid;
}

const std::vector<std::array<int, 3>>& direction_offsets() {
  static const std::vector<std::array<int, 3>> dirs = [] {
    std::vector<std::array<int, 3>> d;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const bool forward =
              dz > 0 || (dz == 0 && dy > 0) || (dz == 0 && dy == 0 && dx > 0);
          if (forward) d.push_back({dx, dy, dz});
        }
    return d;
  }();
  return dirs;
}

FirstOrderResult first_order_features(const DiscretizedROI& roi,
                                      const std::vector<double>& raw) {
  FirstOrderResult r;
  const std::size_t n = raw.size();
  const double dn = static_cast<double>(n);

  const double mean = std::accumulate(raw.begin(), raw.end(), 0.0) / dn;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0, sumsq = 0.0;
  for (double v : raw) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
    mad += std::abs(d);
    sumsq += v * v;
  }
  const double var = m2 / (dn - 1.0);
  m2 /= dn;
  m3 /= dn;
  m4 /= dn;
  mad /= dn;

  std::vector<double> sorted = raw;
  std::sort(sorted.begin(), sorted.end());
  const double median = (n % 2 == 1)
                            ? sorted[n / 2]
                            : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const double mn = sorted.front();
  const double mx = sorted.back();

  double skew = kNaN, kurt = kNaN;
  if (m2 > 0.0) {
    skew = m3 / std::pow(m2, 1.5);
    kurt = m4 / (m2 * m2);
  } else {
    r.undefined.push_back("skewness");
    r.undefined.push_back("kurtosis");
  }

  double cov = kNaN;
  if (mean != 0.0) {
    cov = std::sqrt(var) / mean;
  } else {
    r.undefined.push_back("cov");
  }

  // histogram over discretized levels
  std::vector<double> hist(static_cast<std::size_t>(roi.num_levels), 0.0);
  for (std::uint16_t l : roi.levels) hist[l - 1] += 1.0;
  const double total = static_cast<double>(roi.levels.size());
  double entropy = 0.0, uniformity = 0.0;
  for (double c : hist) {
    const double p = c / total;
    entropy -= plog2(p);
    uniformity += p * p;
  }

  r.values = {mean,  var, skew, kurt,    median,  mn,         mad,
              mx,    mx - mn, cov, std::sqrt(sumsq / dn), entropy, uniformity};
  return r;
}

CooccurrenceMatrix compute_glcm(const LevelGrid& grid) {
  const int ng = grid.num_levels;
  CooccurrenceMatrix m;
  m.counts = Eigen::MatrixXd::Zero(ng, ng);

  const auto& dims = grid.dims;
  for (const auto& d : direction_offsets()) {
    for (int z = 0; z < dims.z; ++z)
      for (int y = 0; y < dims.y; ++y)
        for (int x = 0; x < dims.x; ++x) {
          const int a = grid.at(x, y, z);
          if (a == 0) continue;
          const int nx = x + d[0], ny = y + d[1], nz = z + d[2];
          if (nx < 0 || ny < 0 || nz < 0 || nx >= dims.x || ny >= dims.y || nz >= dims.z)
            continue;
          const int b = grid.at(nx, ny, nz);
          if (b == 0) continue;
          m.counts(a - 1, b - 1) += 1.0;
          m.counts(b - 1, a - 1) += 1.0;
        }
  }

  const double total = m.counts.sum();
  if (total <= 0.0) throw EmptyMatrix("GLCM has no valid voxel pairs");
  m.normalized = m.counts / total;
  return m;
}

GLCMResult glcm_features(const CooccurrenceMatrix& m) {
  const Eigen::MatrixXd& p = m.normalized;
  const int ng = static_cast<int>(p.rows());
  GLCMResult r;

  Eigen::VectorXd px = p.rowwise().sum();
  double mu = 0.0;
  for (int i = 0; i < ng; ++i) mu += (i + 1.0) * px(i);
  double sigma2 = 0.0;
  for (int i = 0; i < ng; ++i) sigma2 += (i + 1.0 - mu) * (i + 1.0 - mu) * px(i);

  // marginal distributions of i+j and |i-j|
  std::vector<double> psum(static_cast<std::size_t>(2 * ng + 1), 0.0);   // index k = i+j
  std::vector<double> pdiff(static_cast<std::size_t>(ng), 0.0);          // index k = |i-j|
  double autoc = 0.0, contrast = 0.0, dissim = 0.0, energy = 0.0, entropy = 0.0;
  double homog = 0.0, idm = 0.0, idmn = 0.0, idn = 0.0, invvar = 0.0, maxp = 0.0;
  double cp = 0.0, cs = 0.0, ct = 0.0, corr_num = 0.0;
  double hxy1 = 0.0, hxy2 = 0.0;
  for (int i = 0; i < ng; ++i) {
    for (int j = 0; j < ng; ++j) {
      const double pij = p(i, j);
      const double vi = i + 1.0, vj = j + 1.0;
      const double dd = vi - vj;
      if (pij > 0.0) {
        psum[static_cast<std::size_t>(i + j + 2)] += pij;
        pdiff[static_cast<std::size_t>(std::abs(i - j))] += pij;
        autoc += vi * vj * pij;
        contrast += dd * dd * pij;
        dissim += std::abs(dd) * pij;
        energy += pij * pij;
        entropy -= plog2(pij);
        homog += pij / (1.0 + std::abs(dd));
        idm += pij / (1.0 + dd * dd);
        idmn += pij / (1.0 + (dd / ng) * (dd / ng));
        idn += pij / (1.0 + std::abs(dd) / ng);
        if (i != j) invvar += pij / (dd * dd);
        maxp = std::max(maxp, pij);
        const double s = vi + vj - 2.0 * mu;
        ct += s * s * pij;
        cs += s * s * s * pij;
        cp += s * s * s * s * pij;
        corr_num += vi * vj * pij;
        const double pxpy = px(i) * px(j);
        if (pxpy > 0.0) hxy1 -= pij * std::log2(pxpy);
      }
      hxy2 -= plog2(px(i) * px(j));
    }
  }

  double correlation = kNaN;
  if (sigma2 > 0.0) {
    correlation = (corr_num - mu * mu) / sigma2;
  } else {
    r.undefined.push_back("glcm_correlation");
  }

  double diff_entropy = 0.0, diff_avg = 0.0;
  for (std::size_t k = 0; k < pdiff.size(); ++k) {
    diff_entropy -= plog2(pdiff[k]);
    diff_avg += static_cast<double>(k) * pdiff[k];
  }
  double diff_var = 0.0;
  for (std::size_t k = 0; k < pdiff.size(); ++k)
    diff_var += (static_cast<double>(k) - diff_avg) * (static_cast<double>(k) - diff_avg) *
                pdiff[k];

  double sum_entropy = 0.0, sum_avg = 0.0;
  for (std::size_t k = 0; k < psum.size(); ++k) {
    sum_entropy -= plog2(psum[k]);
    sum_avg += static_cast<double>(k) * psum[k];
  }
  double sum_var = 0.0;
  for (std::size_t k = 0; k < psum.size(); ++k)
    sum_var += (static_cast<double>(k) - sum_avg) * (static_cast<double>(k) - sum_avg) *
               psum[k];

  double hx = 0.0;
  for (int i = 0; i < ng; ++i) hx -= plog2(px(i));
  const double hxy = entropy;
  const double imc1 = hx > 0.0 ? (hxy - hxy1) / hx : 0.0;
  const double imc2 = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - hxy))));

  r.values = {autoc,    cp,      cs,          ct,       contrast, correlation,
              diff_entropy, diff_var, dissim,  energy,   entropy,  homog,
              imc1,     imc2,    idm,         idmn,     idn,      invvar,
              maxp,     mu,      sum_entropy, sum_var,  sigma2};
  return r;
}

RunLengthMatrix compute_glrlm(const LevelGrid& grid, const std::array<int, 3>& dir) {
  const auto& dims = grid.dims;
  const int ng = grid.num_levels;
  const int max_run = std::max({dims.x, dims.y, dims.z});
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(ng, max_run);

  auto in_grid = [&](int x, int y, int z) {
    return x >= 0 && y >= 0 && z >= 0 && x < dims.x && y < dims.y && z < dims.z;
  };

  int longest = 0;
  for (int z = 0; z < dims.z; ++z)
    for (int y = 0; y < dims.y; ++y)
      for (int x = 0; x < dims.x; ++x) {
        // line starts: no predecessor along dir inside the grid
        if (in_grid(x - dir[0], y - dir[1], z - dir[2])) continue;
        int cur_level = 0, cur_len = 0;
        int cx = x, cy = y, cz = z;
        auto flush = [&] {
          if (cur_level > 0 && cur_len > 0) {
            counts(cur_level - 1, cur_len - 1) += 1.0;
            longest = std::max(longest, cur_len);
          }
          cur_level = 0;
          cur_len = 0;
        };
        while (in_grid(cx, cy, cz)) {
          const int lvl = grid.at(cx, cy, cz);
          if (lvl == 0) {
            flush();  // runs break at mask boundaries
          } else if (lvl == cur_level) {
            ++cur_len;
          } else {
            flush();
            cur_level = lvl;
            cur_len = 1;
          }
          cx += dir[0];
          cy += dir[1];
          cz += dir[2];
        }
        flush();
      }

  RunLengthMatrix m;
  if (longest == 0) throw EmptyMatrix("GLRLM is empty (no masked voxels)");
  m.counts = counts.leftCols(longest);
  return m;
}

RunLengthMatrix compute_glrlm(const LevelGrid& grid) {
  RunLengthMatrix total;
  for (const auto& dir : direction_offsets()) {
    RunLengthMatrix m = compute_glrlm(grid, dir);
    if (total.counts.size() == 0) {
      total.counts = m.counts;
    } else {
      const Eigen::Index cols = std::max(total.counts.cols(), m.counts.cols());
      if (total.counts.cols() < cols)
        total.counts.conservativeResizeLike(
            Eigen::MatrixXd::Zero(total.counts.rows(), cols));
      total.counts.leftCols(m.counts.cols()) += m.counts;
    }
  }
  return total;
}

std::array<double, kNumGLRLM> glrlm_features(const RunLengthMatrix& m,
                                             std::size_t num_voxels) {
  const Eigen::MatrixXd& c = m.counts;
  const int ng = static_cast<int>(c.rows());
  const int rmax = static_cast<int>(c.cols());
  const double nr = c.sum();

  double sre = 0.0, lre = 0.0, lgre = 0.0, hgre = 0.0;
  double srlge = 0.0, srhge = 0.0, lrlge = 0.0, lrhge = 0.0;
  double gln = 0.0, rln = 0.0;
  for (int i = 0; i < ng; ++i) {
    const double gi = i + 1.0;
    double row = 0.0;
    for (int j = 0; j < rmax; ++j) {
      const double cij = c(i, j);
      if (cij == 0.0) continue;
      const double rj = j + 1.0;
      row += cij;
      sre += cij / (rj * rj);
      lre += cij * rj * rj;
      lgre += cij / (gi * gi);
      hgre += cij * gi * gi;
      srlge += cij / (rj * rj * gi * gi);
      srhge += cij * gi * gi / (rj * rj);
      lrlge += cij * rj * rj / (gi * gi);
      lrhge += cij * rj * rj * gi * gi;
    }
    gln += row * row;
  }
  for (int j = 0; j < rmax; ++j) {
    const double col = c.col(j).sum();
    rln += col * col;
  }

  const double rp = nr / static_cast<double>(num_voxels);
  return {gln / nr,   hgre / nr, lre / nr, lrhge / nr, lrlge / nr, lgre / nr,
          nr,         rln / nr,  rp,       sre / nr,   srhge / nr, srlge / nr};
}

FeatureExtraction extract_all(const IntensityVolume& vol, const VoxelMask& mask,
                              const DiscretizationStrategy& strategy) {
  FeatureExtraction out;
  auto& v = out.vec.values;
  v.fill(kNaN);

  const std::vector<double> raw = masked_intensities(vol, mask);
  const DiscretizedROI roi = discretize(vol, mask, strategy);
  const LevelGrid grid = embed_levels(roi, mask);

  const FirstOrderResult fo = first_order_features(roi, raw);
  std::copy(fo.values.begin(), fo.values.end(), v.begin());
  out.undefined = fo.undefined;

  try {
    const CooccurrenceMatrix glcm = compute_glcm(grid);
    const GLCMResult g = glcm_features(glcm);
    std::copy(g.values.begin(), g.values.end(), v.begin() + kNumFirstOrder);
    out.undefined.insert(out.undefined.end(), g.undefined.begin(), g.undefined.end());
  } catch (const EmptyMatrix&) {
    const auto& names = feature_names();
    for (int i = 0; i < kNumGLCM; ++i)
      out.undefined.push_back(names[static_cast<std::size_t>(kNumFirstOrder + i)]);
  }

  try {
    const RunLengthMatrix rlm = compute_glrlm(grid);
    const auto g = glrlm_features(rlm, raw.size());
    std::copy(g.begin(), g.end(), v.begin() + kNumFirstOrder + kNumGLCM);
  } catch (const EmptyMatrix&) {
    const auto& names = feature_names();
    for (int i = 0; i < kNumGLRLM; ++i)
      out.undefined.push_back(
          names[static_cast<std::size_t>(kNumFirstOrder + kNumGLCM + i)]);
  }

  return out;
}

}  // namespace mtbo
