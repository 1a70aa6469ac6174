#include "adalista/inpainting.hpp"

#include "adalista/datagen.hpp"
#include "adalista/parallel.hpp"
#include "adalista/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace adalista {

namespace {

Vector patch_at(const Matrix& px, PatchPosition pos, Index size) {
  Vector v(size * size);
  for (Index r = 0; r < size; ++r)
    for (Index c = 0; c < size; ++c) v[r * size + c] = px(pos.row + r, pos.col + c);
  return v;
}

std::vector<PatchPosition> all_positions(Index rows, Index cols, Index size, Index stride) {
  require(size >= 1 && stride >= 1, "patches: size and stride must be >= 1");
  if (rows < size || cols < size) throw std::invalid_argument("patches: image smaller than the patch size");
  std::vector<PatchPosition> out;
  for (Index r = 0; r + size <= rows; r += stride)
    for (Index c = 0; c + size <= cols; c += stride) out.push_back({r, c});
  return out;
}

struct MaskedStats {
  double mean = 0.0;
  double std = 1.0;
};

MaskedStats masked_stats(const Vector& v, const Mask& M) {
  const Index observed = M.size() - M.missing_count();
  if (observed == 0) return {};
  double sum = 0.0;
  for (Index i = 0; i < v.size(); ++i)
    if (M.observed(i)) sum += v[i];
  const double mean = sum / static_cast<double>(observed);
  double ss = 0.0;
  for (Index i = 0; i < v.size(); ++i)
    if (M.observed(i)) ss += (v[i] - mean) * (v[i] - mean);
  return {mean, std::max(std::sqrt(ss / static_cast<double>(observed)), kPatchStdFloor)};
}

Vector normalize_masked(const Vector& v, const Mask& M, const MaskedStats& st) {
  return M.apply((v.array() - st.mean).matrix() / st.std);
}

// Largest eigenvalue of (M D)^T (M D), from the rows/columns of D D^T that
// belong to observed pixels.
double effective_lipschitz(const Matrix& DDt, const Mask& M) {
  std::vector<Index> keep;
  for (Index i = 0; i < M.size(); ++i)
    if (M.observed(i)) keep.push_back(i);
  if (keep.empty()) return 0.0;
  Matrix S(static_cast<Index>(keep.size()), static_cast<Index>(keep.size()));
  for (std::size_t a = 0; a < keep.size(); ++a)
    for (std::size_t b = 0; b < keep.size(); ++b)
      S(static_cast<Index>(a), static_cast<Index>(b)) = DDt(keep[a], keep[b]);
  // spectral_norm_sq(S) = lambda_max(S)^2 for symmetric PSD S.
  return std::sqrt(spectral_norm_sq(S));
}

} // namespace

Mask random_mask(Index n, double p, std::uint64_t seed) {
  require(n >= 0, "random_mask: negative length");
  require(p >= 0.0 && p <= 1.0, "random_mask: ratio must lie in [0, 1]");
  const auto zeros = static_cast<Index>(std::llround(p * static_cast<double>(n)));
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  Vector observed = Vector::Ones(n);
  for (Index i = 0; i < zeros; ++i) observed[idx[static_cast<std::size_t>(i)]] = 0.0;
  return Mask(std::move(observed));
}

Matrix random_image_mask(Index rows, Index cols, double p, std::uint64_t seed) {
  const Mask flat = random_mask(rows * cols, p, seed);
  Matrix out(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) out(r, c) = flat.diagonal()[r * cols + c];
  return out;
}

Mask crop_mask(const Matrix& observed, PatchPosition pos, Index size) {
  require(pos.row >= 0 && pos.col >= 0 && pos.row + size <= observed.rows() && pos.col + size <= observed.cols(),
          "crop_mask: patch outside the mask");
  return Mask(patch_at(observed, pos, size));
}

PatchSet extract_patches(const ImageGray& img, Index size, Index stride) {
  PatchSet ps;
  ps.size = size;
  ps.positions = all_positions(img.rows(), img.cols(), size, stride);
  const std::size_t count = ps.positions.size();
  ps.patches.resize(count);
  ps.means.resize(count);
  ps.stds.resize(count);
  const Mask full = Mask::identity(size * size);
  parallel_for(count, [&](std::size_t i) {
    const Vector v = patch_at(img.pixels, ps.positions[i], size);
    const MaskedStats st = masked_stats(v, full);
    ps.means[i] = st.mean;
    ps.stds[i] = st.std;
    ps.patches[i] = (v.array() - st.mean).matrix() / st.std;
  });
  return ps;
}

PatchSet extract_masked_patches(const ImageGray& img, const Matrix& observed, Index size, Index stride) {
  require(observed.rows() == img.rows() && observed.cols() == img.cols(), "extract_masked_patches: mask shape");
  PatchSet ps;
  ps.size = size;
  ps.positions = all_positions(img.rows(), img.cols(), size, stride);
  const std::size_t count = ps.positions.size();
  ps.patches.resize(count);
  ps.means.resize(count);
  ps.stds.resize(count);
  parallel_for(count, [&](std::size_t i) {
    const Vector v = patch_at(img.pixels, ps.positions[i], size);
    const Mask M = crop_mask(observed, ps.positions[i], size);
    const MaskedStats st = masked_stats(v, M);
    ps.means[i] = st.mean;
    ps.stds[i] = st.std;
    ps.patches[i] = normalize_masked(v, M, st);
  });
  return ps;
}

ImageGray reconstruct_patches(const PatchSet& ps, Index rows, Index cols) {
  require(ps.patches.size() == ps.positions.size() && ps.means.size() == ps.patches.size() &&
              ps.stds.size() == ps.patches.size(),
          "reconstruct_patches: inconsistent patch set");
  Matrix sum = Matrix::Zero(rows, cols);
  Matrix count = Matrix::Zero(rows, cols);
  for (std::size_t i = 0; i < ps.patches.size(); ++i) {
    const auto [r0, c0] = ps.positions[i];
    require(r0 >= 0 && c0 >= 0 && r0 + ps.size <= rows && c0 + ps.size <= cols,
            "reconstruct_patches: patch position outside the image");
    require_same_size(ps.patches[i].size(), ps.size * ps.size, "reconstruct_patches: patch length");
    for (Index r = 0; r < ps.size; ++r) {
      for (Index c = 0; c < ps.size; ++c) {
        sum(r0 + r, c0 + c) += ps.patches[i][r * ps.size + c] * ps.stds[i] + ps.means[i];
        count(r0 + r, c0 + c) += 1.0;
      }
    }
  }
  Matrix px = (count.array() > 0.0).select(sum.array() / count.array().max(1.0), 0.0);
  return ImageGray(std::move(px));
}

double psnr(const ImageGray& clean, const ImageGray& recon) {
  require(clean.rows() == recon.rows() && clean.cols() == recon.cols(), "psnr: image shapes differ");
  require(clean.pixels.size() > 0, "psnr: empty image");
  const double mse = (clean.pixels - recon.pixels).squaredNorm() / static_cast<double>(clean.pixels.size());
  if (mse == 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

Dictionary dct_dictionary(Index n, Index m) {
  const auto p = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
  const auto q = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(m))));
  if (n < 1 || m < 1 || p * p != n || q * q != m || q < p)
    throw std::invalid_argument("dct_dictionary: n and m must be perfect squares with m >= n");
  Matrix D1(p, q);
  const double pi = std::acos(-1.0);
  for (Index k = 0; k < q; ++k)
    for (Index i = 0; i < p; ++i)
      D1(i, k) = std::cos(pi * (static_cast<double>(i) + 0.5) * static_cast<double>(k) / static_cast<double>(q));
  Matrix D(n, m);
  for (Index a = 0; a < q; ++a)
    for (Index b = 0; b < q; ++b)
      for (Index r = 0; r < p; ++r)
        for (Index c = 0; c < p; ++c) D(r * p + c, a * q + b) = D1(r, a) * D1(c, b);
  return Dictionary(normalize_columns(D), true);
}

std::string_view to_string(InpaintSolver s) {
  switch (s) {
  case InpaintSolver::Ista: return "ista";
  case InpaintSolver::Fista: return "fista";
  case InpaintSolver::AdaLfista: return "ada-lfista";
  }
  return "fista";
}

InpaintSolver inpaint_solver_from_string(std::string_view name) {
  if (name == "ista") return InpaintSolver::Ista;
  if (name == "fista") return InpaintSolver::Fista;
  if (name == "ada-lfista" || name == "ada_lfista") return InpaintSolver::AdaLfista;
  throw std::invalid_argument("unknown inpainting solver '" + std::string(name) + "'");
}

SparseCode solve_patch(const Signal& y, const Mask& M, const Dictionary& D, const Matrix& DDt,
                       const InpaintOptions& opt) {
  if (opt.solver == InpaintSolver::AdaLfista) {
    if (!opt.params) throw std::invalid_argument("inpaint: ada-lfista needs trained parameters");
    return inpaint_forward(y, M, *opt.params, opt.K);
  }
  const double L = effective_lipschitz(DDt, M);
  if (L <= 0.0) return SparseCode::Zero(D.code_dim());
  const Dictionary MD(M.apply_rows(D.matrix()));
  ClassicConfig cfg;
  cfg.lambda = opt.lambda;
  cfg.iterations = opt.K;
  cfg.lipschitz = L;
  cfg.record_objectives = false;
  return opt.solver == InpaintSolver::Ista ? ista(y, MD, cfg).final_code() : fista(y, MD, cfg).final_code();
}

InpaintResult inpaint_image(const ImageGray& img, const Matrix& observed, const Dictionary& D,
                            const InpaintOptions& opt) {
  require(opt.K >= 0, "inpaint: K must be >= 0");
  const Index size = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(D.signal_dim()))));
  require(size * size == D.signal_dim(), "inpaint: dictionary rows must be a square patch size");
  if (opt.solver == InpaintSolver::AdaLfista) {
    if (!opt.params) throw std::invalid_argument("inpaint: ada-lfista needs trained parameters");
    require_same_size(opt.params->W1.rows(), D.signal_dim(), "inpaint: network W1 rows");
    require_same_size(opt.params->W1.cols(), D.code_dim(), "inpaint: network W1 cols");
  }
  InpaintResult res;
  res.observed = observed;
  res.corrupted = ImageGray(img.pixels.cwiseProduct(observed));
  PatchSet ps = extract_masked_patches(img, observed, size, 1);
  const Matrix DDt = D.matrix() * D.matrix().transpose();
  parallel_for(ps.patches.size(), [&](std::size_t i) {
    const Mask M = crop_mask(observed, ps.positions[i], size);
    const SparseCode x = solve_patch(ps.patches[i], M, D, DDt, opt);
    ps.patches[i] = D.matrix() * x;
  });
  res.reconstruction = reconstruct_patches(ps, img.rows(), img.cols());
  res.psnr_db = psnr(img, res.reconstruction);
  return res;
}

InpaintResult inpaint_image(const ImageGray& img, std::uint64_t mask_seed, double p, const Dictionary& D,
                            const InpaintOptions& opt) {
  return inpaint_image(img, random_image_mask(img.rows(), img.cols(), p, mask_seed), D, opt);
}

std::vector<TrainingTriple> inpaint_training_set(const std::vector<ImageGray>& images,
                                                 std::shared_ptr<const Dictionary> D,
                                                 const InpaintTrainingOptions& opt) {
  require(!images.empty(), "inpaint_training_set: no images");
  require(D != nullptr, "inpaint_training_set: no dictionary");
  const Index size = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(D->signal_dim()))));
  require(size * size == D->signal_dim(), "inpaint_training_set: dictionary rows must be a square patch size");
  for (const auto& im : images)
    require(im.rows() >= size && im.cols() >= size, "inpaint_training_set: image smaller than a patch");
  const Matrix DDt = D->matrix() * D->matrix().transpose();

  std::vector<TrainingTriple> out(static_cast<std::size_t>(opt.patches));
  parallel_for(out.size(), [&](std::size_t i) {
    const std::uint64_t s = derive_seed(opt.seed, i);
    std::mt19937_64 rng(derive_seed(s, 0));
    const auto& im = images[std::uniform_int_distribution<std::size_t>(0, images.size() - 1)(rng)];
    const PatchPosition pos{std::uniform_int_distribution<Index>(0, im.rows() - size)(rng),
                            std::uniform_int_distribution<Index>(0, im.cols() - size)(rng)};
    const Vector clean = patch_at(im.pixels, pos, size);
    Mask M = random_mask(size * size, opt.p, derive_seed(s, 1));
    TrainingTriple t;
    t.y = normalize_masked(clean, M, masked_stats(clean, M));
    InpaintOptions label;
    label.solver = InpaintSolver::Fista;
    label.K = opt.label_iterations;
    label.lambda = opt.lambda;
    t.x_ref = solve_patch(t.y, M, *D, DDt, label);
    t.mask = std::move(M);
    t.dictionary = D;
    out[i] = std::move(t);
  });
  return out;
}

} // namespace adalista
