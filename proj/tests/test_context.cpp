#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <set>
#include <thread>

#include "csgaze/context/provider.hpp"

using namespace csgaze;
using namespace csgaze::ctx;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / "csgaze_ctx_test";
  fs::create_directories(dir);
  return dir;
}

std::shared_ptr<ContextBackend> echo_backend() {
  return std::make_shared<FunctionBackend>(
      "echo", [](const ContextRequest& r) { return "about " + r.image_id; });
}

}  // namespace

TEST(CacheFileTest, RoundTripWithNastyText) {
  auto dir = temp_dir();
  std::vector<ContextRecord> records = {
      {"img1", kDefaultPrompt, "synthetic-template", "the left person looks at the right person."},
      {"img\t2", "custom\nprompt", "echo", "text with\ttabs and\nnewlines\\slashes"},
  };
  auto path = dir / "cache.tsv";
  export_cache(records, path);
  auto back = import_cache(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].image_id, records[0].image_id);
  EXPECT_EQ(back[1].image_id, records[1].image_id);
  EXPECT_EQ(back[1].prompt, records[1].prompt);
  EXPECT_EQ(back[1].text, records[1].text);

  // Canonical writer round trips byte-for-byte.
  auto path2 = dir / "cache2.tsv";
  export_cache(back, path2);
  EXPECT_EQ(read_text_file(path), read_text_file(path2));
}

TEST(CacheFileTest, DuplicateHandling) {
  auto dir = temp_dir();
  auto path = dir / "dup.tsv";
  // Identical duplicate: tolerated, deduplicated.
  write_text_file(path,
                  "image_id\tprompt\tsource\ttext\n"
                  "a\tp\tsrc\thello\n"
                  "a\tp\tsrc\thello\n");
  auto recs = import_cache(path);
  EXPECT_EQ(recs.size(), 1u);

  // Conflicting duplicate: error naming the id.
  write_text_file(path,
                  "image_id\tprompt\tsource\ttext\n"
                  "a\tp\tsrc\thello\n"
                  "a\tp\tsrc\tgoodbye\n");
  try {
    import_cache(path);
    FAIL() << "expected conflict error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos) << e.what();
  }

  write_text_file(path, "image_id\tprompt\tsource\n");
  EXPECT_THROW(import_cache(path), Error);
  write_text_file(path, "image_id\tprompt\tsource\ttext\nonly\tthree\tfields\n");
  EXPECT_THROW(import_cache(path), Error);
}

TEST(ProviderTest, MemoizesAndPersists) {
  auto dir = temp_dir();
  auto path = dir / "provider.tsv";
  fs::remove(path);
  int calls = 0;
  auto backend = std::make_shared<FunctionBackend>("counting", [&](const ContextRequest& r) {
    ++calls;
    return "desc of " + r.image_id;
  });
  {
    ContextProvider provider(backend, path);
    auto r1 = provider.get_context({"x1", kDefaultPrompt});
    auto r2 = provider.get_context({"x1", kDefaultPrompt});
    EXPECT_EQ(calls, 1);  // second hit served from memory
    EXPECT_EQ(r1.text, r2.text);
    EXPECT_EQ(r1.source, "counting");
    provider.get_context({"x2", kDefaultPrompt});
    EXPECT_EQ(provider.size(), 2u);
  }
  // A fresh provider reads the persisted cache and needs no backend.
  ContextProvider reloaded(nullptr, path);
  EXPECT_EQ(reloaded.size(), 2u);
  auto r = reloaded.get_context({"x1", kDefaultPrompt});
  EXPECT_EQ(r.text, "desc of x1");
  EXPECT_EQ(calls, 2);
  // Uncached id without a backend is an error.
  EXPECT_THROW(reloaded.get_context({"missing", kDefaultPrompt}), Error);
}

TEST(ProviderTest, MergeDetectsConflicts) {
  ContextProvider provider(echo_backend());
  provider.merge({{"a", kDefaultPrompt, "import", "alpha"}});
  EXPECT_EQ(provider.size(), 1u);
  // Identical merge is a no-op.
  provider.merge({{"a", kDefaultPrompt, "import", "alpha"}});
  EXPECT_EQ(provider.size(), 1u);
  // Conflicting text raises.
  EXPECT_THROW(provider.merge({{"a", kDefaultPrompt, "import", "beta"}}), Error);
  // Merged entries are served without consulting the backend.
  EXPECT_EQ(provider.get_context({"a", kDefaultPrompt}).text, "alpha");
}

TEST(ProviderTest, ConcurrentAccessKeepsOneRecordPerId) {
  std::atomic<int> calls{0};
  auto backend = std::make_shared<FunctionBackend>("concurrent", [&](const ContextRequest& r) {
    calls.fetch_add(1);
    return "t" + r.image_id;
  });
  ContextProvider provider(backend);
  constexpr int kThreads = 8, kIds = 20;
  std::vector<std::thread> workers;
  std::vector<std::string> seen(kThreads * kIds);
  for (int t = 0; t < kThreads; ++t) {
    workers.emplace_back([&, t] {
      for (int i = 0; i < kIds; ++i)
        seen[t * kIds + i] = provider.get_context({"id" + std::to_string(i)}).text;
    });
  }
  for (auto& w : workers) w.join();
  EXPECT_EQ(provider.size(), static_cast<std::size_t>(kIds));
  // Every thread observed the same text per id (first write won everywhere).
  for (int i = 0; i < kIds; ++i) {
    std::set<std::string> texts;
    for (int t = 0; t < kThreads; ++t) texts.insert(seen[t * kIds + i]);
    EXPECT_EQ(texts.size(), 1u) << "id" << i;
  }
  EXPECT_GE(calls.load(), kIds);
}

TEST(ProviderTest, ValidationRejectsEmptyFields) {
  auto backend = std::make_shared<FunctionBackend>("empty", [](const ContextRequest&) {
    return std::string();  // illegal: empty text
  });
  ContextProvider provider(backend);
  EXPECT_THROW(provider.get_context({"x", kDefaultPrompt}), Error);
  EXPECT_THROW(provider.get_context({"", kDefaultPrompt}), Error);
}
