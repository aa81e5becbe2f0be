// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#include "elast/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace elast {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::string current;
  std::istringstream ss(s);
  while (std::getline(ss, current, ',')) {
    current = trim(current);
    if (!current.empty()) parts.push_back(current);
  }
  return parts;
}

}  // namespace

IniFile IniFile::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path.string());
}

IniFile IniFile::parse_string(const std::string& text,
                              const std::string& origin) {
  IniFile ini;
  ini.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        std::ostringstream msg;
        msg << origin << ":" << line_no << ": unterminated section header";
        throw std::runtime_error(msg.str());
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::ostringstream msg;
      msg << origin << ":" << line_no << ": expected 'key = value'";
      throw std::runtime_error(msg.str());
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      std::ostringstream msg;
      msg << origin << ":" << line_no << ": empty key";
      throw std::runtime_error(msg.str());
    }
    ini.sections_[section][key] = Entry{value};
  }
  return ini;
}

const IniFile::Entry* IniFile::find(const std::string& section,
                                    const std::string& key) const {
  const auto sec = sections_.find(section);
  if (sec == sections_.end()) return nullptr;
  const auto entry = sec->second.find(key);
  if (entry == sec->second.end()) return nullptr;
  entry->second.consumed = true;
  return &entry->second;
}

bool IniFile::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string IniFile::get_string(const std::string& section,
                                const std::string& key,
                                const std::string& fallback) const {
  const Entry* e = find(section, key);
  return e ? e->value : fallback;
}

double IniFile::get_double(const std::string& section, const std::string& key,
                           double fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  try {
    size_t pos = 0;
    const double v = std::stod(e->value, &pos);
    if (pos != e->value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::runtime_error(origin_ + ": [" + section + "] " + key +
                             " is not a number: '" + e->value + "'");
  }
}

int IniFile::get_int(const std::string& section, const std::string& key,
                     int fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  try {
    size_t pos = 0;
    const int v = std::stoi(e->value, &pos);
    if (pos != e->value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::runtime_error(origin_ + ": [" + section + "] " + key +
                             " is not an integer: '" + e->value + "'");
  }
}

std::uint64_t IniFile::get_u64(const std::string& section,
                               const std::string& key,
                               std::uint64_t fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  try {
    size_t pos = 0;
    const std::uint64_t v = std::stoull(e->value, &pos);
    if (pos != e->value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::runtime_error(origin_ + ": [" + section + "] " + key +
                             " is not an unsigned integer: '" + e->value + "'");
  }
}

std::vector<double> IniFile::get_double_list(
    const std::string& section, const std::string& key,
    const std::vector<double>& fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  std::vector<double> values;
  for (const auto& part : split_commas(e->value)) {
    try {
      values.push_back(std::stod(part));
    } catch (...) {
      throw std::runtime_error(origin_ + ": [" + section + "] " + key +
                               " has a non-numeric entry: '" + part + "'");
    }
  }
  if (values.empty())
    throw std::runtime_error(origin_ + ": [" + section + "] " + key +
                             " is an empty list");
  return values;
}

std::vector<std::uint64_t> IniFile::get_u64_list(
    const std::string& section, const std::string& key,
    const std::vector<std::uint64_t>& fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  std::vector<std::uint64_t> values;
  for (const auto& part : split_commas(e->value)) {
    try {
      values.push_back(std::stoull(part));
    } catch (...) {
      throw std::runtime_error(origin_ + ": [" + section + "] " + key +
                               " has a non-integer entry: '" + part + "'");
    }
  }
  if (values.empty())
    throw std::runtime_error(origin_ + ": [" + section + "] " + key +
                             " is an empty list");
  return values;
}

std::vector<std::string> IniFile::unconsumed_keys() const {
  std::vector<std::string> keys;
  for (const auto& [section, entries] : sections_)
    for (const auto& [key, entry] : entries)
      if (!entry.consumed) keys.push_back("[" + section + "] " + key);
  return keys;
}

}  // namespace elast
