#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "kerman/error.hpp"
#include "kerman/io.hpp"
#include "kerman/manager.hpp"

namespace kerman {

// Flat `key = value` overrides for ManagerConfig. '#' starts a comment;
// unknown keys are rejected.
class ConfigKeys {
 public:
  struct Key {
    std::string help;
    std::function<std::string(const ManagerConfig&)> get;
    std::function<bool(ManagerConfig&, std::string_view)> set;
  };

  static const std::map<std::string, Key>& all() {
    static const std::map<std::string, Key> keys = build();
    return keys;
  }

  static void apply(ManagerConfig& cfg, const std::string& key, std::string_view value, const std::string& where) {
    const auto& keys = all();
    const auto it = keys.find(key);
    if (it == keys.end()) throw Error(ErrorKind::InvalidConfig, where + ": unknown key '" + key + "'");
    if (!it->second.set(cfg, trim(value))) {
      throw Error(ErrorKind::InvalidConfig, where + ": bad value '" + std::string(value) + "' for " + key);
    }
  }

 private:
  template <typename T, typename Field>
  static Key number(std::string help, Field field) {
    return {std::move(help),
            [field](const ManagerConfig& c) {
              ManagerConfig copy = c;
              if constexpr (std::is_floating_point_v<T>) return format_number(field(copy));
              else return std::to_string(field(copy));
            },
            [field](ManagerConfig& c, std::string_view v) {
              const auto parsed = parse_number<T>(v);
              if (!parsed) return false;
              field(c) = *parsed;
              return true;
            }};
  }

  static std::map<std::string, Key> build() {
    std::map<std::string, Key> k;
    k["human_chk_thld"] = number<int>("frames between detection injections",
                                      [](ManagerConfig& c) -> int& { return c.human_chk_thld; });
    k["resize_to"] = number<int>("square working resolution", [](ManagerConfig& c) -> int& { return c.resize_to; });
    k["workers"] = number<int>("worker threads (0 = all cores)", [](ManagerConfig& c) -> int& { return c.workers; });
    k["trhd_ratio"] = number<double>("gradient threshold as a fraction of the KCF box diagonal",
                                     [](ManagerConfig& c) -> double& { return c.fusion.trhd_ratio; });
    k["trhd"] = {"absolute gradient threshold in pixels (unset = use trhd_ratio)",
                 [](const ManagerConfig& c) { return c.fusion.trhd ? format_number(*c.fusion.trhd) : std::string(); },
                 [](ManagerConfig& c, std::string_view v) {
                   if (v.empty()) {
                     c.fusion.trhd.reset();
                     return true;
                   }
                   const auto p = parse_number<double>(v);
                   if (!p) return false;
                   c.fusion.trhd = *p;
                   return true;
                 }};
    k["max_occluded"] = number<int>("consecutive occluded frames before a track ends",
                                    [](ManagerConfig& c) -> int& { return c.fusion.max_occluded; });
    k["kcf_cell_size"] = number<int>("HOG cell size in pixels", [](ManagerConfig& c) -> int& { return c.kcf.cell_size; });
    k["kcf_sigma"] = number<double>("Gaussian kernel bandwidth", [](ManagerConfig& c) -> double& { return c.kcf.sigma; });
    k["kcf_lambda"] = number<double>("ridge regularizer", [](ManagerConfig& c) -> double& { return c.kcf.lambda; });
    k["kcf_learning_rate"] = number<double>("model interpolation rate",
                                            [](ManagerConfig& c) -> double& { return c.kcf.learning_rate; });
    k["kcf_padding"] = number<double>("training window scale", [](ManagerConfig& c) -> double& { return c.kcf.padding; });
    k["kalman_q"] = number<double>("Kalman process noise", [](ManagerConfig& c) -> double& { return c.kalman.q; });
    k["kalman_r"] = number<double>("Kalman measurement noise", [](ManagerConfig& c) -> double& { return c.kalman.r; });
    k["kalman_p0"] = number<double>("Kalman initial variance", [](ManagerConfig& c) -> double& { return c.kalman.p0; });
    k["bs_history"] = number<int>("background learning history (rate = 1/history)",
                                  [](ManagerConfig& c) -> int& { return c.bg.history; });
    k["bs_var_threshold"] = number<double>("squared Mahalanobis match threshold",
                                           [](ManagerConfig& c) -> double& { return c.bg.var_threshold; });
    k["bs_background_ratio"] = number<double>("weight share treated as background",
                                              [](ManagerConfig& c) -> double& { return c.bg.background_ratio; });
    k["bs_min_area"] = number<double>("smallest contour area kept",
                                      [](ManagerConfig& c) -> double& { return c.bg.min_area; });
    return k;
  }
};

inline void load_config_file(ManagerConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view body(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (eq == std::string_view::npos) throw Error(ErrorKind::InvalidConfig, where + ": expected key=value");
    ConfigKeys::apply(cfg, std::string(trim(body.substr(0, eq))), body.substr(eq + 1), where);
  }
}

}  // namespace kerman
