#include "adalista/inpainting.hpp"
#include "adalista/serialization.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace adalista {

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

long header_number(std::istream& in, const std::string& path, const char* what) {
  const std::string tok = header_token(in);
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": bad PGM " + what + " '" + tok + "'");
  }
}

} // namespace

ImageGray::ImageGray(Matrix px) : pixels(std::move(px)) {
  if (!all_finite(pixels)) throw std::invalid_argument("image has non-finite pixels");
}

ImageGray read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string p = path.string();
  if (header_token(in) != "P5") throw std::runtime_error(p + ": not a binary PGM (P5)");
  const long w = header_number(in, p, "width");
  const long h = header_number(in, p, "height");
  const long maxval = header_number(in, p, "maxval");
  if (maxval > 65535) throw std::runtime_error(p + ": PGM maxval too large");
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(static_cast<std::size_t>(w * h * bytes));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw std::runtime_error(p + ": truncated PGM data");
  Matrix px(h, w);
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>((r * w + c) * bytes);
      const double v = bytes == 1 ? raw[i] : (raw[i] << 8 | raw[i + 1]);
      px(r, c) = v / static_cast<double>(maxval);
    }
  }
  return ImageGray(std::move(px));
}

void write_pgm(const std::filesystem::path& path, const ImageGray& img) {
  std::ostringstream os;
  os << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  std::string body(static_cast<std::size_t>(img.rows() * img.cols()), '\0');
  for (Index r = 0; r < img.rows(); ++r)
    for (Index c = 0; c < img.cols(); ++c)
      body[static_cast<std::size_t>(r * img.cols() + c)] =
          static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(img.pixels(r, c), 0.0, 1.0) * 255.0)));
  write_text_atomic(path, os.str() + body);
}

ImageGray read_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pgm") return read_pgm(path);
  return ImageGray(matrix_from_json(read_json_file(path)));
}

} // namespace adalista
