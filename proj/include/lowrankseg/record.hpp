#pragma once

#include "lowrankseg/linalg.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace lowrankseg::cli {

using Json = nlohmann::ordered_json;

/// Keys whose values depend on the clock rather than the inputs. They are
/// excluded when comparing records for reproducibility.
inline const std::vector<std::string> kVolatileKeys = {"timing", "started_at",
                                                       "finished_at"};

/// Self-describing experiment record: command, parameter echo, argv, library
/// version, timestamps, results and timings.
class Record {
 public:
  Record(std::string command, const std::vector<std::string>& argv);

  Json& params() { return json_["params"]; }
  Json& results() { return json_["results"]; }
  Json& timing() { return json_["timing"]; }

  /// Stamps finished_at and returns the document.
  const Json& finish();

 private:
  Json json_;
};

/// Copy of `record` with every kVolatileKeys entry removed at any depth.
Json strip_volatile(const Json& record);

Json to_json(const Vec& v);

std::string utc_timestamp();

}  // namespace lowrankseg::cli
