#pragma once

// Line-oriented configuration: `[section]` headers, `key = value` pairs,
// `#` comments. Values are pulled through typed getters that mark keys as
// consumed; finish() then rejects anything left over, so typos fail loudly.
// Problems are collected rather than thrown one at a time, and surface
// together in a single ConfigError.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wigner/errors.hpp"

namespace wigner {

class ConfigDoc {
 public:
  static ConfigDoc parse(const std::string& text) {
    ConfigDoc doc;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']' || t.size() < 3) {
          doc.issues_.push_back("malformed section header at line " +
                                std::to_string(lineno));
          continue;
        }
        section = trim(t.substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        doc.issues_.push_back("expected key = value at line " +
                              std::to_string(lineno));
        continue;
      }
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (key.empty()) {
        doc.issues_.push_back("empty key at line " + std::to_string(lineno));
        continue;
      }
      auto& slot = doc.entries_[section][key];
      if (slot.line != 0) {
        doc.issues_.push_back("duplicate key " + qualify(section, key) +
                              " at line " + std::to_string(lineno) +
                              " (first at line " + std::to_string(slot.line) +
                              ")");
        continue;
      }
      slot = Entry{value, lineno, false};
    }
    return doc;
  }

  static ConfigDoc parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = entries_.find(section);
    return s != entries_.end() && s->second.count(key) > 0;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) {
    const Entry* e = consume(section, key);
    return e ? e->value : fallback;
  }

  std::string require_string(const std::string& section,
                             const std::string& key) {
    const Entry* e = consume(section, key);
    if (!e) {
      issues_.push_back("missing required key " + qualify(section, key));
      return {};
    }
    return e->value;
  }

  double get_double(const std::string& section, const std::string& key,
                    double fallback) {
    const Entry* e = consume(section, key);
    return e ? parse_double(section, key, *e) : fallback;
  }

  double require_double(const std::string& section, const std::string& key) {
    const Entry* e = consume(section, key);
    if (!e) {
      issues_.push_back("missing required key " + qualify(section, key));
      return 0.0;
    }
    return parse_double(section, key, *e);
  }

  int get_int(const std::string& section, const std::string& key,
              int fallback) {
    const Entry* e = consume(section, key);
    return e ? static_cast<int>(parse_integer(section, key, *e)) : fallback;
  }

  int require_int(const std::string& section, const std::string& key) {
    const Entry* e = consume(section, key);
    if (!e) {
      issues_.push_back("missing required key " + qualify(section, key));
      return 0;
    }
    return static_cast<int>(parse_integer(section, key, *e));
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) {
    const Entry* e = consume(section, key);
    if (!e) return fallback;
    std::uint64_t out = 0;
    const char* b = e->value.data();
    const char* end = b + e->value.size();
    auto [p, ec] = std::from_chars(b, end, out);
    if (ec != std::errc() || p != end) {
      issues_.push_back(describe(section, key, *e, "not an unsigned integer"));
      return fallback;
    }
    return out;
  }

  std::vector<int> require_ints(const std::string& section,
                                const std::string& key) {
    std::vector<int> out;
    const Entry* e = consume(section, key);
    if (!e) {
      issues_.push_back("missing required key " + qualify(section, key));
      return out;
    }
    std::istringstream in(e->value);
    std::string tok;
    while (in >> tok) {
      int value = 0;
      auto [p, ec] =
          std::from_chars(tok.data(), tok.data() + tok.size(), value);
      if (ec != std::errc() || p != tok.data() + tok.size()) {
        issues_.push_back(describe(section, key, *e,
                                   "element '" + tok + "' is not an integer"));
        return {};
      }
      out.push_back(value);
    }
    if (out.empty())
      issues_.push_back(describe(section, key, *e, "empty list"));
    return out;
  }

  std::vector<double> require_doubles(const std::string& section,
                                      const std::string& key) {
    std::vector<double> out;
    const Entry* e = consume(section, key);
    if (!e) {
      issues_.push_back("missing required key " + qualify(section, key));
      return out;
    }
    std::istringstream in(e->value);
    std::string tok;
    while (in >> tok) {
      try {
        std::size_t used = 0;
        const double value = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        out.push_back(value);
      } catch (const std::exception&) {
        issues_.push_back(
            describe(section, key, *e, "element '" + tok + "' is not a number"));
        return {};
      }
    }
    if (out.empty())
      issues_.push_back(describe(section, key, *e, "empty list"));
    return out;
  }

  void note(const std::string& issue) { issues_.push_back(issue); }

  // Flags unconsumed keys and raises everything collected so far.
  void finish() {
    for (const auto& [section, keys] : entries_)
      for (const auto& [key, entry] : keys)
        if (!entry.consumed)
          issues_.push_back("unknown key " + qualify(section, key) +
                            " at line " + std::to_string(entry.line));
    if (!issues_.empty()) throw ConfigError(issues_);
  }

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
    bool consumed = false;
  };

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static std::string qualify(const std::string& section,
                             const std::string& key) {
    return section.empty() ? key : "[" + section + "] " + key;
  }

  static std::string describe(const std::string& section,
                              const std::string& key, const Entry& e,
                              const std::string& what) {
    return qualify(section, key) + ": " + what + " (line " +
           std::to_string(e.line) + ")";
  }

  const Entry* consume(const std::string& section, const std::string& key) {
    auto s = entries_.find(section);
    if (s == entries_.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    k->second.consumed = true;
    return &k->second;
  }

  double parse_double(const std::string& section, const std::string& key,
                      const Entry& e) {
    try {
      std::size_t used = 0;
      const double value = std::stod(e.value, &used);
      if (used != e.value.size()) throw std::invalid_argument(e.value);
      return value;
    } catch (const std::exception&) {
      issues_.push_back(describe(section, key, e, "not a number"));
      return 0.0;
    }
  }

  long long parse_integer(const std::string& section, const std::string& key,
                          const Entry& e) {
    long long out = 0;
    const char* begin = e.value.data();
    const char* end = begin + e.value.size();
    auto [p, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || p != end) {
      issues_.push_back(describe(section, key, e, "not an integer"));
      return 0;
    }
    return out;
  }

  std::map<std::string, std::map<std::string, Entry>> entries_;
  std::vector<std::string> issues_;
};

}  // namespace wigner
