// Patch-based grayscale inpainting: masks, overlapping patch extraction and
// reassembly, per-patch sparse coding, PSNR.

#pragma once

#include "adalista/core.hpp"
#include "adalista/mask.hpp"
#include "adalista/solvers.hpp"
#include "adalista/training.hpp"
#include "adalista/unrolled.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace adalista {

/// Grayscale image with pixels in [0, 1].
struct ImageGray {
  Matrix pixels;

  ImageGray() = default;
  explicit ImageGray(Matrix px);

  Index rows() const noexcept { return pixels.rows(); }
  Index cols() const noexcept { return pixels.cols(); }
};

/// Binary P5 PGM, 8 or 16 bit. Pixels are scaled by 1/maxval.
ImageGray read_pgm(const std::filesystem::path& path);
/// 8-bit P5 PGM; values are clamped to [0, 1] and rounded.
void write_pgm(const std::filesystem::path& path, const ImageGray& img);
/// PGM by extension (.pgm), otherwise a JSON matrix.
ImageGray read_image(const std::filesystem::path& path);

/// Exactly round(p n) zero entries at uniformly drawn positions.
Mask random_mask(Index n, double p, std::uint64_t seed);

/// H x W 0/1 matrix, 1 = observed; exactly round(p H W) zeros.
Matrix random_image_mask(Index rows, Index cols, double p, std::uint64_t seed);

inline constexpr Index kPatchSize = 8;
inline constexpr double kPatchStdFloor = 1e-6;

struct PatchPosition {
  Index row = 0;
  Index col = 0;
};

/// Normalized patches, vectorized row-major, with the statistics needed to
/// undo the normalization.
struct PatchSet {
  Index size = kPatchSize;
  std::vector<Vector> patches;
  std::vector<PatchPosition> positions;
  std::vector<double> means;
  std::vector<double> stds;
};

/// Every size x size patch at the given stride, (p - mean) / max(std, 1e-6).
PatchSet extract_patches(const ImageGray& img, Index size = kPatchSize, Index stride = 1);

/// Same layout, but statistics use only observed pixels and unobserved
/// entries are 0 in the normalized patch. A patch with no observed pixel
/// gets mean 0, std 1.
PatchSet extract_masked_patches(const ImageGray& img, const Matrix& observed, Index size = kPatchSize,
                                Index stride = 1);

/// Row-major crop of a 0/1 image mask.
Mask crop_mask(const Matrix& observed, PatchPosition pos, Index size);

/// Pixelwise average of the un-normalized patches.
ImageGray reconstruct_patches(const PatchSet& ps, Index rows, Index cols);

/// 10 log10(1 / MSE) with peak 1; identical images give 100.
double psnr(const ImageGray& clean, const ImageGray& recon);

/// Kronecker product of two 1-D overcomplete DCT bases (sqrt(n) x sqrt(m)),
/// column-normalized. n and m must be perfect squares with m >= n.
Dictionary dct_dictionary(Index n = 64, Index m = 256);

enum class InpaintSolver { Ista, Fista, AdaLfista };

std::string_view to_string(InpaintSolver s);
InpaintSolver inpaint_solver_from_string(std::string_view name);

inline constexpr double kInpaintLambda = 0.02;

struct InpaintOptions {
  InpaintSolver solver = InpaintSolver::Fista;
  int K = 20;
  double lambda = kInpaintLambda;
  /// Required for AdaLfista.
  const InpaintParams* params = nullptr;
};

struct InpaintResult {
  ImageGray corrupted;
  ImageGray reconstruction;
  Matrix observed;
  double psnr_db = 0.0;
};

/// Solves every overlapping patch of the masked image and reassembles.
/// Classic solvers run on the effective dictionary M D of each patch with
/// step 1/L(M D); the learned path runs the inpainting network.
InpaintResult inpaint_image(const ImageGray& img, const Matrix& observed, const Dictionary& D,
                            const InpaintOptions& opt);
InpaintResult inpaint_image(const ImageGray& img, std::uint64_t mask_seed, double p, const Dictionary& D,
                            const InpaintOptions& opt);

/// Sparse code of one masked, normalized patch y under mask M.
SparseCode solve_patch(const Signal& y, const Mask& M, const Dictionary& D, const Matrix& DDt,
                       const InpaintOptions& opt);

struct InpaintTrainingOptions {
  Index patches = 5000;
  double p = 0.5;
  double lambda = kInpaintLambda;
  int label_iterations = kInpaintLabelIterations;
  std::uint64_t seed = 0;
};

/// Random patches drawn uniformly over the images, each with its own random
/// mask, normalized with observed-pixel statistics, labeled by FISTA on M D.
std::vector<TrainingTriple> inpaint_training_set(const std::vector<ImageGray>& images,
                                                 std::shared_ptr<const Dictionary> D,
                                                 const InpaintTrainingOptions& opt);

} // namespace adalista
