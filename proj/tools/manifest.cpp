#include "manifest.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>

#include "cellvote/error.hpp"
#include "cellvote/time.hpp"

namespace cellvote::cli {

namespace {

class Digest {
 public:
  Digest() : ctx_(EVP_MD_CTX_new()) { EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr); }
  ~Digest() { EVP_MD_CTX_free(ctx_); }
  Digest(const Digest&) = delete;
  Digest& operator=(const Digest&) = delete;

  void update(std::string_view bytes) { EVP_DigestUpdate(ctx_, bytes.data(), bytes.size()); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int n = 0;
    EVP_DigestFinal_ex(ctx_, md, &n);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < n; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read '" + path.string() + "'");
  Digest d;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) d.update(std::string_view(buf, static_cast<std::size_t>(in.gcount())));
  return d.hex();
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Digest d;
  d.update(bytes);
  return d.hex();
}

std::string sha256_path(const std::filesystem::path& path) {
  if (!std::filesystem::is_directory(path)) return file_digest(path);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(path))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  Digest d;
  for (const auto& f : files) {
    d.update(std::filesystem::relative(f, path).generic_string());
    d.update("\n");
    d.update(file_digest(f));
    d.update("\n");
  }
  return d.hex();
}

RunManifest::RunManifest(std::string command)
    : command_(std::move(command)), started_(std::chrono::steady_clock::now()), started_at_(system_now()) {}

void RunManifest::set_config(const std::string& digest_source) {
  config_digest_ = digest_source.empty() ? "" : sha256_hex(digest_source);
}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs_.push_back({{"path", path.string()}, {"sha256", sha256_path(path)}});
}

void RunManifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path); }

nlohmann::json RunManifest::to_json() const {
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& p : outputs_)
    outputs.push_back({{"path", p.string()}, {"sha256", std::filesystem::exists(p) ? sha256_path(p) : ""}});
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  return {{"command", command_},
          {"config_sha256", config_digest_.empty() ? nlohmann::json(nullptr) : nlohmann::json(config_digest_)},
          {"seed", seed_},
          {"parameters", parameters_},
          {"inputs", inputs_},
          {"outputs", std::move(outputs)},
          {"started_at", format_iso8601(started_at_)},
          {"elapsed_seconds", elapsed}};
}

void RunManifest::append_to(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "manifest.jsonl", std::ios::app);
  out << to_json().dump() << '\n';
  if (!out) throw Error(ErrorKind::IoError, "cannot append to '" + (dir / "manifest.jsonl").string() + "'");
}

}  // namespace cellvote::cli
