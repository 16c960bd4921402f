#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <memory>

#include "crowdlab/digest.hpp"
#include "crowdlab/error.hpp"
#include "tsv.hpp"

namespace crowdlab {

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1)
    throw Error("digest computation failed");
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1)
    throw Error("digest computation failed");
  std::string hex(static_cast<std::size_t>(len) * 2, '0');
  static const char* digits = "0123456789abcdef";
  for (unsigned int i = 0; i < len; ++i) {
    hex[2 * i] = digits[md[i] >> 4];
    hex[2 * i + 1] = digits[md[i] & 0xF];
  }
  return hex;
}

std::string sha256_file(const std::string& path) { return sha256_hex(tsv::read_file(path)); }

}  // namespace crowdlab
