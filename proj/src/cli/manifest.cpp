#include "hetrx/cli/manifest.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "hetrx/errors.hpp"

namespace hetrx::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (f) {
    f.read(buf.data(), buf.size());
    if (f.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(f.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::string hex;
  char b[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

std::filesystem::path write_manifest(const std::filesystem::path& dir, const Manifest& m) {
  const auto path = dir / "manifest.txt";
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "# schema=hetrx.manifest.v1\n";
  out << "command=" << m.command << '\n';
  out << "version=" << m.version << '\n';
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", m.wall_time_s);
  out << "wall_time_s=" << buf << '\n';
  out << "exit_code=" << m.exit_code << '\n';
  out << "[config]\n";
  if (m.config) m.config->write(out);
  out << "[outputs]\n";
  for (const auto& p : m.outputs) {
    out << p.filename().string() << ' ' << sha256_file(p) << '\n';
  }
  return path;
}

}  // namespace hetrx::cli
