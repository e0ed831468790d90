#include "sanmt/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <sstream>

#include "sanmt/errors.hpp"

namespace sanmt {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

void RunManifest::option(std::string key, std::string value) {
  options.push_back({std::move(key), std::move(value), false});
}

void RunManifest::flag(std::string key, bool value) {
  options.push_back({std::move(key), value ? "true" : "false", true});
}

void RunManifest::input(const std::filesystem::path& path) {
  inputs.emplace_back(path.string(), sha256_file(path));
}

std::vector<std::string> RunManifest::argv() const {
  std::vector<std::string> out{command};
  for (const Entry& e : options) {
    if (e.is_flag) {
      if (e.value == "true") out.push_back("--" + e.key);
    } else {
      out.push_back("--" + e.key);
      out.push_back(e.value);
    }
  }
  return out;
}

std::string RunManifest::to_text() const {
  std::ostringstream out;
  out << "sanmt-manifest 1\n";
  out << "version " << version << '\n';
  out << "command " << command << '\n';
  for (const Entry& e : options) out << (e.is_flag ? "flag " : "option ") << e.key << ' ' << e.value << '\n';
  for (const auto& [path, digest] : inputs) out << "input " << digest << ' ' << path << '\n';
  return out.str();
}

RunManifest RunManifest::parse(const std::string& text) {
  RunManifest m;
  m.version.clear();
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  auto fail = [&](const std::string& why) {
    throw ParseError("manifest line " + std::to_string(number) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const std::size_t sp = line.find(' ');
    const std::string kind = line.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (number == 1) {
      if (line != "sanmt-manifest 1") fail("not a sanmt manifest");
      continue;
    }
    if (kind == "version") {
      m.version = rest;
    } else if (kind == "command") {
      m.command = rest;
    } else if (kind == "option" || kind == "flag" || kind == "input") {
      const std::size_t sp2 = rest.find(' ');
      if (sp2 == std::string::npos) fail("expected two fields after '" + kind + "'");
      std::string first = rest.substr(0, sp2), second = rest.substr(sp2 + 1);
      if (kind == "input") {
        m.inputs.emplace_back(std::move(second), std::move(first));
      } else {
        m.options.push_back({std::move(first), std::move(second), kind == "flag"});
      }
    } else {
      fail("unknown entry '" + kind + "'");
    }
  }
  if (m.command.empty()) throw ParseError("manifest has no command");
  return m;
}

void RunManifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_text();
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace sanmt
