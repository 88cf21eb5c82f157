#include "brachy/errors.hpp"

#include <sstream>

namespace brachy {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

}  // namespace

InclinationExceeded::InclinationExceeded(double inclination_deg, double limit_deg)
    : Error("InclinationExceeded",
            [&] {
              std::ostringstream os;
              os << "inclination " << inclination_deg << " deg exceeds limit " << limit_deg << " deg";
              return os.str();
            }()),
      inclination_(inclination_deg) {}

TravelExceeded::TravelExceeded(std::vector<std::string> joints)
    : Error("TravelExceeded", "joint travel exceeded: " + join(joints)), joints_(std::move(joints)) {}

IndexOutOfGrid::IndexOutOfGrid(int col, int row)
    : Error("IndexOutOfGrid",
            "grid index (" + std::to_string(col) + "," + std::to_string(row) + ") outside template") {}

NotAtHome::NotAtHome(double d_ins)
    : Error("NotAtHome", [&] {
        std::ostringstream os;
        os << "needle not fully retracted (d_ins " << d_ins << " mm)";
        return os.str();
      }()) {}

ParseError::ParseError(std::string location, const std::string& reason)
    : Error("ParseError", location + ": " + reason), location_(std::move(location)) {}

ValidationError::ValidationError(std::string needle_id, const std::string& constraint)
    : Error("ValidationError", needle_id.empty() ? constraint : "needle " + needle_id + ": " + constraint),
      needle_id_(std::move(needle_id)) {}

DigestMismatch::DigestMismatch(const std::string& expected, const std::string& actual)
    : Error("DigestMismatch", "replay digest " + actual + " does not match recorded " + expected) {}

RunFailure::RunFailure(std::string needle_id, const std::string& cause, const std::string& reason)
    : Error("RunFailure", "needle " + needle_id + ": " + cause + ": " + reason),
      needle_id_(std::move(needle_id)),
      cause_(cause) {}

}  // namespace brachy
