#include "lowrankseg/record.hpp"

#include "lowrankseg/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>

namespace lowrankseg::cli {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Record::Record(std::string command, const std::vector<std::string>& argv) {
  json_["command"] = std::move(command);
  json_["version"] = std::string(kVersion);
  json_["argv"] = argv;
  json_["params"] = Json::object();
  json_["started_at"] = utc_timestamp();
  json_["finished_at"] = nullptr;
  json_["results"] = Json::object();
  json_["timing"] = Json::object();
}

const Json& Record::finish() {
  json_["finished_at"] = utc_timestamp();
  return json_;
}

Json strip_volatile(const Json& record) {
  if (record.is_object()) {
    Json out = Json::object();
    for (const auto& [key, value] : record.items()) {
      if (std::find(kVolatileKeys.begin(), kVolatileKeys.end(), key) != kVolatileKeys.end()) {
        continue;
      }
      out[key] = strip_volatile(value);
    }
    return out;
  }
  if (record.is_array()) {
    Json out = Json::array();
    for (const auto& item : record) out.push_back(strip_volatile(item));
    return out;
  }
  return record;
}

Json to_json(const Vec& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

}  // namespace lowrankseg::cli
