#pragma once

#include "selfstab/domain.hpp"
#include "selfstab/model.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selfstab {

/// Schema violation or unreadable config; the message starts with the key path.
class ConfigError : public Error {
 public:
  ConfigError(std::string key_path, const std::string& message)
      : Error("config", key_path.empty() ? message : key_path + ": " + message),
        key_path_(std::move(key_path)) {}
  const std::string& key_path() const { return key_path_; }

 private:
  std::string key_path_;
};

/// Sectioned key-value text, validated against a fixed schema. Every key
/// has a default (possibly "auto", resolved from other keys at use time)
/// except the model and domain definitions. The resolved text lists every
/// section and key with its effective value and parses back to an equal
/// config.
class ScenarioConfig {
 public:
  static ScenarioConfig parse(std::string_view text, std::string origin = "<string>");
  static ScenarioConfig load(const std::filesystem::path& path);
  /// "paper-5.1" or "paper-5.2".
  static ScenarioConfig builtin(std::string_view name);
  static std::vector<std::string> builtin_names();
  static std::string builtin_text(std::string_view name);

  /// Replaces one value ("section.key=value") and re-validates.
  void set(std::string_view assignment);

  std::string resolved_text() const;
  const std::string& origin() const { return origin_; }
  std::string name() const { return get("scenario", "name"); }

  const ModelSpec& model() const { return *model_; }
  const Domain& domain() const { return *domain_; }
  int dim() const { return model_->dim(); }

  // Typed access with key-path errors.
  const std::string& get(const std::string& section, const std::string& key) const;
  bool is_auto(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key) const;
  int get_int(const std::string& section, const std::string& key) const;
  std::uint64_t get_seed(const std::string& section, const std::string& key) const;
  bool get_bool(const std::string& section, const std::string& key) const;
  /// Whitespace-separated numbers; `dim` checks the count when positive.
  std::vector<double> get_list(const std::string& section, const std::string& key) const;
  Vec get_point(const std::string& section, const std::string& key) const;
  std::vector<std::string> get_words(const std::string& section, const std::string& key) const;

  /// The stable point: [equilibrium] x_stable, or find_equilibrium from the guess.
  Vec x_stable() const;
  /// A point key whose "auto" value means x_stable.
  Vec point_or_stable(const std::string& section, const std::string& key) const;
  /// [constants] box, or the domain bounding box doubled about its center.
  Box constants_box() const;

  using Values = std::map<std::string, std::map<std::string, std::string>>;
  const Values& values() const { return values_; }

 private:
  ScenarioConfig() = default;
  void validate_and_build();

  std::string origin_;
  Values values_;
  std::optional<ModelSpec> model_;
  std::optional<Domain> domain_;
  mutable std::optional<Vec> x_stable_;
};

}  // namespace selfstab
