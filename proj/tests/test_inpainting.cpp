#include "adalista/datagen.hpp"
#include "adalista/inpainting.hpp"
#include "adalista/theory.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace adalista;

namespace {

const std::filesystem::path kImages = ADALISTA_DATA_DIR "/images";

ImageGray crop(const ImageGray& img, Index r, Index c, Index h, Index w) {
  return ImageGray(img.pixels.block(r, c, h, w));
}

ImageGray test_crop(const std::string& name, Index size = 32) {
  return crop(read_pgm(kImages / (name + ".pgm")), 40, 40, size, size);
}

ImageGray random_image(Index h, Index w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix px(h, w);
  for (Index i = 0; i < px.size(); ++i) px.data()[i] = u(rng);
  return ImageGray(px);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

} // namespace

TEST(RandomMask, ExactZeroCount) {
  EXPECT_EQ(random_mask(64, 0.5, 3).missing_count(), 32);
  EXPECT_EQ(random_mask(64, 0.0, 3).diagonal(), Vector::Ones(64));
  EXPECT_EQ(random_mask(64, 1.0, 3).diagonal(), Vector::Zero(64));
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const double p = static_cast<double>(seed % 11) / 10.0;
    const Mask M = random_mask(64, p, seed);
    EXPECT_EQ(M.missing_count(), std::llround(p * 64));
    EXPECT_EQ(M.missing_count(), (M.diagonal().array() == 0.0).count());
  }
  EXPECT_THROW(random_mask(64, 1.5, 0), std::invalid_argument);
  EXPECT_THROW(random_mask(64, -0.1, 0), std::invalid_argument);
}

TEST(RandomMask, ImageMaskExactAndDeterministic) {
  const Matrix a = random_image_mask(20, 30, 0.5, 7);
  EXPECT_EQ((a.array() == 0.0).count(), 300);
  EXPECT_EQ(random_image_mask(20, 30, 0.5, 7), a);
  EXPECT_NE(random_image_mask(20, 30, 0.5, 8), a);
}

TEST(Patches, Counts) {
  std::mt19937_64 rng(1);
  EXPECT_EQ(extract_patches(random_image(8, 8, rng)).patches.size(), 1u);
  const PatchSet ps = extract_patches(random_image(10, 10, rng));
  EXPECT_EQ(ps.patches.size(), 9u);
  EXPECT_EQ(ps.positions.size(), 9u);
  EXPECT_EQ(ps.positions[1].row, 0);
  EXPECT_EQ(ps.positions[1].col, 1);
  EXPECT_EQ(extract_patches(random_image(12, 9, rng)).patches.size(), 10u);
  EXPECT_THROW(extract_patches(random_image(7, 9, rng)), std::invalid_argument);
}

TEST(Patches, NormalizedStatistics) {
  std::mt19937_64 rng(2);
  const PatchSet ps = extract_patches(random_image(12, 12, rng));
  for (const Vector& p : ps.patches) {
    EXPECT_NEAR(p.mean(), 0.0, 1e-12);
    EXPECT_NEAR(std::sqrt(p.squaredNorm() / 64.0), 1.0, 1e-12);
  }
}

TEST(Patches, RoundTrip) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5; ++t) {
    const ImageGray img = random_image(8 + t * 3, 10 + t, rng);
    const ImageGray back = reconstruct_patches(extract_patches(img), img.rows(), img.cols());
    EXPECT_LE(testutil::max_abs_diff(back.pixels, img.pixels), 1e-12);
  }
  const ImageGray cam = test_crop("cameraman");
  EXPECT_LE(testutil::max_abs_diff(reconstruct_patches(extract_patches(cam), 32, 32).pixels, cam.pixels), 1e-12);
}

TEST(Patches, SinglePatchAndConstantImage) {
  std::mt19937_64 rng(4);
  const ImageGray one = random_image(8, 8, rng);
  EXPECT_LE(testutil::max_abs_diff(reconstruct_patches(extract_patches(one), 8, 8).pixels, one.pixels), 1e-12);
  const ImageGray flat(Matrix::Constant(11, 13, 0.3));
  const PatchSet ps = extract_patches(flat);
  for (double s : ps.stds) EXPECT_DOUBLE_EQ(s, kPatchStdFloor);
  for (const Vector& p : ps.patches) EXPECT_LE(p.cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE(testutil::max_abs_diff(reconstruct_patches(ps, 11, 13).pixels, flat.pixels), 1e-12);
}

TEST(Patches, MaskedStatisticsUseObservedPixels) {
  std::mt19937_64 rng(5);
  const ImageGray img = random_image(9, 9, rng);
  const Matrix obs = random_image_mask(9, 9, 0.5, 1);
  const PatchSet ps = extract_masked_patches(img, obs);
  ASSERT_EQ(ps.patches.size(), 4u);
  for (std::size_t k = 0; k < ps.patches.size(); ++k) {
    const Mask M = crop_mask(obs, ps.positions[k], 8);
    const Matrix block = img.pixels.block(ps.positions[k].row, ps.positions[k].col, 8, 8);
    double sum = 0.0;
    for (Index i = 0; i < 8; ++i)
      for (Index j = 0; j < 8; ++j)
        if (M.observed(i * 8 + j)) sum += block(i, j);
    EXPECT_NEAR(ps.means[k], sum / static_cast<double>(64 - M.missing_count()), 1e-12);
    for (Index i = 0; i < 64; ++i)
      if (!M.observed(i)) EXPECT_EQ(ps.patches[k][i], 0.0);
  }
  const PatchSet blind = extract_masked_patches(img, Matrix::Zero(9, 9));
  for (std::size_t k = 0; k < blind.patches.size(); ++k) {
    EXPECT_EQ(blind.means[k], 0.0);
    EXPECT_EQ(blind.stds[k], 1.0);
  }
}

TEST(Psnr, Examples) {
  std::mt19937_64 rng(6);
  const ImageGray a = random_image(16, 16, rng);
  const ImageGray shifted(a.pixels.array() + 0.1);
  EXPECT_NEAR(psnr(a, shifted), 20.0, 1e-9);
  EXPECT_EQ(psnr(a, a), 100.0);
  const ImageGray b = random_image(16, 16, rng);
  EXPECT_NEAR(psnr(a, b), 10.0 * std::log10(1.0 / (a.pixels - b.pixels).squaredNorm() * 256.0), 1e-12);
  EXPECT_THROW(psnr(a, random_image(16, 15, rng)), std::invalid_argument);
}

TEST(DctDictionary, Shapes) {
  const Dictionary sq = dct_dictionary(64, 64);
  EXPECT_LE(mutual_coherence(sq.matrix(), sq.matrix()), 1e-12);
  EXPECT_LE(testutil::max_abs_diff(sq.matrix().transpose() * sq.matrix(), Matrix::Identity(64, 64)), 1e-12);
  const Dictionary D = dct_dictionary(64, 256);
  EXPECT_EQ(D.signal_dim(), 64);
  EXPECT_EQ(D.code_dim(), 256);
  EXPECT_LE((D.matrix().colwise().norm().array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_THROW(dct_dictionary(64, 200), std::invalid_argument);
  EXPECT_THROW(dct_dictionary(63, 256), std::invalid_argument);
  EXPECT_THROW(dct_dictionary(64, 16), std::invalid_argument);
}

TEST(SolvePatch, ClassicPathIsIstaOnMaskedDictionary) {
  const Dictionary D = dct_dictionary(64, 256);
  const Matrix DDt = D.matrix() * D.matrix().transpose();
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const Mask M = random_mask(64, 0.5, static_cast<std::uint64_t>(t));
    const Signal y = M.apply(testutil::gaussian_vec(64, rng));
    const Dictionary MD(M.apply_rows(D.matrix()));
    for (auto solver : {InpaintSolver::Ista, InpaintSolver::Fista}) {
      InpaintOptions opt;
      opt.solver = solver;
      opt.K = 20;
      ClassicConfig cfg;
      cfg.lambda = opt.lambda;
      cfg.iterations = 20;
      const SparseCode ref = solver == InpaintSolver::Ista ? ista(y, MD, cfg).final_code()
                                                           : fista(y, MD, cfg).final_code();
      EXPECT_LE(testutil::max_abs_diff(solve_patch(y, M, D, DDt, opt), ref), 1e-12);
    }
  }
}

TEST(SolvePatch, FullyMaskedGivesZero) {
  const Dictionary D = dct_dictionary(64, 256);
  const Matrix DDt = D.matrix() * D.matrix().transpose();
  const Mask M = random_mask(64, 1.0, 0);
  InpaintOptions opt;
  EXPECT_EQ(solve_patch(Signal::Zero(64), M, D, DDt, opt), SparseCode::Zero(256));
  const InpaintParams p = inpaint_dictionary_init(D, 20, kInpaintLambda, true);
  opt.solver = InpaintSolver::AdaLfista;
  opt.params = &p;
  EXPECT_EQ(solve_patch(Signal::Zero(64), M, D, DDt, opt), SparseCode::Zero(256));
}

TEST(InpaintImage, FullyMaskedImageReconstructsMeans) {
  const ImageGray img = test_crop("coins", 12);
  const InpaintResult r = inpaint_image(img, 0, 1.0, dct_dictionary(64, 256), InpaintOptions{});
  EXPECT_EQ(r.corrupted.pixels, Matrix::Zero(12, 12));
  EXPECT_LE(r.reconstruction.pixels.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(InpaintImage, UnmaskedFistaIsAccurate) {
  InpaintOptions opt;
  opt.solver = InpaintSolver::Fista;
  opt.K = 500;
  const InpaintResult r = inpaint_image(test_crop("cameraman"), 0, 0.0, dct_dictionary(64, 256), opt);
  EXPECT_GT(r.psnr_db, 40.0);
}

TEST(InpaintImage, DeterministicAndSeedDependent) {
  const ImageGray img = test_crop("astronaut", 16);
  const Dictionary D = dct_dictionary(64, 256);
  const InpaintResult a = inpaint_image(img, 3, 0.5, D, InpaintOptions{});
  const InpaintResult b = inpaint_image(img, 3, 0.5, D, InpaintOptions{});
  EXPECT_EQ(a.reconstruction.pixels, b.reconstruction.pixels);
  EXPECT_EQ(a.psnr_db, b.psnr_db);
  EXPECT_NE(inpaint_image(img, 4, 0.5, D, InpaintOptions{}).observed, a.observed);
  EXPECT_EQ((a.observed.array() == 0.0).count(), 128);
}

TEST(InpaintImage, MedianPsnrMonotoneInMissingRatio) {
  const Dictionary D = dct_dictionary(64, 256);
  for (auto solver : {InpaintSolver::Ista, InpaintSolver::Fista}) {
    InpaintOptions opt;
    opt.solver = solver;
    double prev = std::numeric_limits<double>::infinity();
    for (double p : {0.1, 0.3, 0.5, 0.7}) {
      std::vector<double> scores;
      for (const std::string name : {"cameraman", "astronaut", "coffee", "chelsea", "coins"})
        scores.push_back(inpaint_image(test_crop(name), 11, p, D, opt).psnr_db);
      const double med = median(scores);
      EXPECT_LE(med, prev + 1e-12) << to_string(solver) << " p=" << p;
      prev = med;
    }
  }
}

TEST(InpaintImage, ShapeErrors) {
  const ImageGray img = test_crop("coins", 16);
  EXPECT_THROW(inpaint_image(img, 0, 0.5, random_dictionary(60, 80, 0), InpaintOptions{}), std::invalid_argument);
  EXPECT_THROW(inpaint_image(img, Matrix::Ones(15, 16), dct_dictionary(64, 256), InpaintOptions{}),
               std::invalid_argument);
  InpaintOptions opt;
  opt.solver = InpaintSolver::AdaLfista;
  EXPECT_THROW(inpaint_image(img, 0, 0.5, dct_dictionary(64, 256), opt), std::invalid_argument);
  const InpaintParams wrong = inpaint_dictionary_init(dct_dictionary(64, 64), 5, kInpaintLambda, true);
  opt.params = &wrong;
  EXPECT_THROW(inpaint_image(img, 0, 0.5, dct_dictionary(64, 256), opt), std::invalid_argument);
}

TEST(InpaintTrainingSet, MasksAndLabels) {
  const std::vector<ImageGray> imgs{test_crop("cameraman"), test_crop("coffee")};
  auto D = std::make_shared<const Dictionary>(dct_dictionary(64, 256));
  InpaintTrainingOptions o;
  o.patches = 40;
  o.label_iterations = 50;
  const auto set = inpaint_training_set(imgs, D, o);
  ASSERT_EQ(set.size(), 40u);
  int distinct = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    ASSERT_TRUE(set[i].mask.has_value());
    EXPECT_EQ(set[i].mask->missing_count(), 32);
    EXPECT_EQ(set[i].mask->apply(set[i].y), set[i].y);
    EXPECT_EQ(set[i].x_ref.size(), 256);
    if (i > 0 && set[i].mask->diagonal() != set[i - 1].mask->diagonal()) ++distinct;
  }
  EXPECT_GT(distinct, 30);
  const auto again = inpaint_training_set(imgs, D, o);
  for (std::size_t i = 0; i < set.size(); ++i) EXPECT_EQ(again[i].x_ref, set[i].x_ref);
}

TEST(Pgm, RoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "adalista_test_image.pgm";
  Matrix px(5, 7);
  for (Index i = 0; i < px.size(); ++i) px.data()[i] = static_cast<double>(i * 7 % 256) / 255.0;
  write_pgm(path, ImageGray(px));
  const ImageGray back = read_pgm(path);
  EXPECT_LE(testutil::max_abs_diff(back.pixels, px), 1e-12);
  EXPECT_EQ(read_image(path).pixels, back.pixels);
  std::filesystem::remove(path);
  EXPECT_THROW(read_pgm(path), std::exception);
  const ImageGray cam = read_pgm(kImages / "cameraman.pgm");
  EXPECT_EQ(cam.rows(), 128);
  EXPECT_GE(cam.pixels.minCoeff(), 0.0);
  EXPECT_LE(cam.pixels.maxCoeff(), 1.0);
}
