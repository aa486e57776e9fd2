#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "dhff/image.hpp"

namespace dhff {

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// Reads one ASCII unsigned integer token; pos is left on the terminating
// whitespace byte.
long read_token(const std::vector<unsigned char>& buf, std::size_t& pos,
                const char* what) {
  while (pos < buf.size() && is_space(buf[pos])) ++pos;
  if (pos >= buf.size())
    throw PnmError(PnmErrorKind::BadHeader,
                   std::string("pnm: missing header token: ") + what);
  if (!std::isdigit(buf[pos]))
    throw PnmError(PnmErrorKind::BadHeader,
                   std::string("pnm: non-numeric header token: ") + what);
  long v = 0;
  while (pos < buf.size() && std::isdigit(buf[pos])) {
    v = v * 10 + (buf[pos] - '0');
    if (v > 1'000'000'000)
      throw PnmError(PnmErrorKind::BadHeader,
                     std::string("pnm: header token out of range: ") + what);
    ++pos;
  }
  return v;
}

}  // namespace

Image load_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw PnmError(PnmErrorKind::Io, "pnm: cannot open " + path);
  std::vector<unsigned char> buf{std::istreambuf_iterator<char>(in),
                                 std::istreambuf_iterator<char>()};

  if (buf.size() < 2 || buf[0] != 'P')
    throw PnmError(PnmErrorKind::BadMagic, "pnm: missing P5/P6 magic");
  int channels;
  if (buf[1] == '5')
    channels = 1;
  else if (buf[1] == '6')
    channels = 3;
  else
    throw PnmError(PnmErrorKind::BadMagic,
                   std::string("pnm: unsupported magic P") +
                       static_cast<char>(buf[1]));

  std::size_t pos = 2;
  const long w = read_token(buf, pos, "width");
  const long h = read_token(buf, pos, "height");
  const long maxval = read_token(buf, pos, "maxval");
  if (w < 1 || h < 1)
    throw PnmError(PnmErrorKind::BadHeader, "pnm: non-positive dimensions");
  if (maxval != 255)
    throw PnmError(PnmErrorKind::BadMaxval,
                   "pnm: maxval must be 255, got " + std::to_string(maxval));
  if (pos >= buf.size() || !is_space(buf[pos]))
    throw PnmError(PnmErrorKind::BadHeader,
                   "pnm: missing whitespace after maxval");
  ++pos;  // exactly one whitespace byte before the payload

  const std::size_t need = std::size_t(w) * std::size_t(h) * channels;
  if (buf.size() - pos < need)
    throw PnmError(PnmErrorKind::Truncated,
                   "pnm: payload truncated, need " + std::to_string(need) +
                       " bytes, have " + std::to_string(buf.size() - pos));

  Image img(static_cast<int>(h), static_cast<int>(w), channels);
  for (std::size_t i = 0; i < need; ++i)
    img.data[i] = float(buf[pos + i]) / 255.0f;
  return img;
}

void save_pnm(const Image& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("save_pnm: channels must be 1 or 3");
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw PnmError(PnmErrorKind::Io, "pnm: cannot open " + path +
                                         " for writing");
  out << (img.channels == 1 ? "P5" : "P6") << "\n"
      << img.width << " " << img.height << "\n255\n";

  std::vector<unsigned char> payload(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    double v = img.data[i];
    if (!(v > 0.0)) v = 0.0;  // also catches NaN
    if (v > 1.0) v = 1.0;
    // round half away from zero
    payload[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out)
    throw PnmError(PnmErrorKind::Io, "pnm: write failed: " + path);
}

}  // namespace dhff
