#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

#include "baitwatch/textcorpus.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("baitwatch_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline baitwatch::Article make_article(std::string id, std::string category, baitwatch::TokenSeq headline,
                                       std::vector<baitwatch::TokenSeq> paragraphs) {
  baitwatch::Article a;
  a.id = std::move(id);
  a.category = std::move(category);
  a.headline = std::move(headline);
  a.paragraphs = std::move(paragraphs);
  return a;
}

}  // namespace testing
