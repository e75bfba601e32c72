#pragma once

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "fmbeam/errors.hpp"

namespace fmbeam {

/// Reads a JSON object field by field and rejects keys nobody asked for.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <class T>
  StrictObject& read(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return *this;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(qualified(key) + ": " + e.what());
    }
    return *this;
  }

  const nlohmann::json* child(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + qualified(it.key()) + "'");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace fmbeam
