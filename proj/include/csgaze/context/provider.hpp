#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "csgaze/common.hpp"

namespace csgaze::ctx {

inline constexpr const char* kDefaultPrompt =
    "Describe how the persons are interacting in the scene.";

struct ContextRequest {
  std::string image_id;
  std::string prompt = kDefaultPrompt;
};

struct ContextRecord {
  std::string image_id;
  std::string prompt;
  std::string source;  // backend tag the text came from (or "cache")
  std::string text;

  void validate() const {
    require(!image_id.empty(), "context record: empty image id");
    require(!text.empty(), "context record for '" + image_id + "': empty text");
  }
};

// Produces interaction descriptions for images.  Implementations range from
// the synthetic template writer to fixture files to an external captioning
// service; the provider only sees this interface.
class ContextBackend {
 public:
  virtual ~ContextBackend() = default;
  virtual std::string name() const = 0;
  virtual std::string describe(const ContextRequest& req) = 0;
};

// Adapts any callable; this is also the integration point for external
// captioners (wrap the RPC call in the function).
class FunctionBackend : public ContextBackend {
 public:
  FunctionBackend(std::string name, std::function<std::string(const ContextRequest&)> fn)
      : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  std::string describe(const ContextRequest& req) override { return fn_(req); }

 private:
  std::string name_;
  std::function<std::string(const ContextRequest&)> fn_;
};

// --- cache file format -----------------------------------------------------

namespace detail {
inline const char* kCacheHeader = "image_id\tprompt\tsource\ttext";
}

inline void export_cache(const std::vector<ContextRecord>& records,
                         const std::filesystem::path& path) {
  std::string text = detail::kCacheHeader;
  text += '\n';
  for (const auto& r : records) {
    r.validate();
    text += escape_field(r.image_id);
    text += '\t';
    text += escape_field(r.prompt);
    text += '\t';
    text += escape_field(r.source);
    text += '\t';
    text += escape_field(r.text);
    text += '\n';
  }
  write_text_file(path, text);
}

// Loads a cache file; a duplicated id is tolerated only when the whole
// record is identical (idempotent re-append), otherwise it is an error.
inline std::vector<ContextRecord> import_cache(const std::filesystem::path& path) {
  auto lines = split_lines(read_text_file(path));
  if (lines.empty() || lines[0] != detail::kCacheHeader)
    raise("bad context cache header: " + path.string());
  std::vector<ContextRecord> out;
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string at = path.string() + ":" + std::to_string(i + 1);
    auto fields = split_tabs(lines[i]);
    if (fields.size() != 4)
      raise("malformed context cache line at " + at + ": expected 4 fields, got " +
            std::to_string(fields.size()));
    ContextRecord r;
    r.image_id = unescape_field(fields[0], "image_id at " + at);
    r.prompt = unescape_field(fields[1], "prompt at " + at);
    r.source = unescape_field(fields[2], "source at " + at);
    r.text = unescape_field(fields[3], "text at " + at);
    r.validate();
    auto it = seen.find(r.image_id);
    if (it != seen.end()) {
      const auto& prev = out[it->second];
      if (prev.prompt != r.prompt || prev.text != r.text)
        raise("conflicting duplicate context for id '" + r.image_id + "' at " + at);
      continue;
    }
    seen[r.image_id] = out.size();
    out.push_back(std::move(r));
  }
  return out;
}

// Thread-safe memoizing provider.  First write wins: concurrent misses on
// the same id may both call the backend, but only one result is kept, and
// get_context always returns the kept one.
class ContextProvider {
 public:
  explicit ContextProvider(std::shared_ptr<ContextBackend> backend,
                           std::filesystem::path cache_path = {})
      : backend_(std::move(backend)), cache_path_(std::move(cache_path)) {
    if (!cache_path_.empty() && std::filesystem::exists(cache_path_))
      for (auto& r : import_cache(cache_path_)) cache_.emplace(r.image_id, std::move(r));
  }

  ContextRecord get_context(const ContextRequest& req) {
    require(!req.image_id.empty(), "get_context: empty image id");
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(req.image_id);
      if (it != cache_.end()) return it->second;
    }
    require(backend_ != nullptr, "get_context: no backend and id '" + req.image_id +
                                     "' is not cached");
    ContextRecord r;
    r.image_id = req.image_id;
    r.prompt = req.prompt;
    r.source = backend_->name();
    r.text = backend_->describe(req);
    r.validate();
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, inserted] = cache_.emplace(req.image_id, r);
    if (inserted) append_to_file(it->second);
    return it->second;  // first write wins
  }

  void merge(const std::vector<ContextRecord>& records) {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& r : records) {
      r.validate();
      auto [it, inserted] = cache_.emplace(r.image_id, r);
      if (inserted)
        append_to_file(it->second);
      else if (it->second.text != r.text)
        raise("merge: conflicting context for id '" + r.image_id + "'");
    }
  }

  std::vector<ContextRecord> records() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<ContextRecord> out;
    out.reserve(cache_.size());
    for (const auto& [id, r] : cache_) out.push_back(r);
    return out;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.size();
  }

 private:
  void append_to_file(const ContextRecord& r) {
    if (cache_path_.empty()) return;
    bool fresh = !std::filesystem::exists(cache_path_);
    std::ofstream out(cache_path_, std::ios::binary | std::ios::app);
    if (!out) raise("cannot write context cache: " + cache_path_.string());
    if (fresh) out << detail::kCacheHeader << '\n';
    out << escape_field(r.image_id) << '\t' << escape_field(r.prompt) << '\t'
        << escape_field(r.source) << '\t' << escape_field(r.text) << '\n';
  }

  std::shared_ptr<ContextBackend> backend_;
  std::filesystem::path cache_path_;
  std::map<std::string, ContextRecord> cache_;
  mutable std::mutex mu_;
};

}  // namespace csgaze::ctx
