// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace elast {

/// Flat key-value configuration with [sections]; `#` and `;` comments.
class IniFile {
 public:
  static IniFile parse_file(const std::filesystem::path& path);
  static IniFile parse_string(const std::string& text,
                              const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key,
              int fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  std::vector<double> get_double_list(const std::string& section,
                                      const std::string& key,
                                      const std::vector<double>& fallback) const;
  std::vector<std::uint64_t> get_u64_list(
      const std::string& section, const std::string& key,
      const std::vector<std::uint64_t>& fallback) const;

  /// Keys present in the file but never read by any getter; used to reject
  /// misspelled configuration.
  std::vector<std::string> unconsumed_keys() const;

 private:
  struct Entry {
    std::string value;
    mutable bool consumed = false;
  };
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::string origin_;

  const Entry* find(const std::string& section, const std::string& key) const;
};

}  // namespace elast
