#include <morpde/report.hpp>

#include <cmath>
#include <cstdio>
#include <ctime>

namespace morpde {

namespace {

std::string json_number(double v) {
  if (std::isnan(v)) return "\"nan\"";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
  return out;
}

}  // namespace

bool Report::all_pass() const {
  for (const auto& inv : invariants) {
    if (!inv.pass) return false;
  }
  return true;
}

std::string Report::render_json() const {
  std::string out;
  out += "{\n";
  out += "  \"config_echo\": " + json_string(config_echo) + ",\n";

  out += "  \"invariants\": {";
  for (std::size_t i = 0; i < invariants.size(); ++i) {
    const auto& inv = invariants[i];
    out += i ? ",\n    " : "\n    ";
    out += json_string(inv.name) + ": {\"pass\": ";
    out += inv.pass ? "true" : "false";
    out += ", \"worst\": " + json_number(inv.worst);
    out += ", \"tol\": " + json_number(inv.tol) + "}";
  }
  out += invariants.empty() ? "},\n" : "\n  },\n";

  out += "  \"curves\": {";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    out += i ? ",\n    " : "\n    ";
    out += json_string(c.name) + ": [";
    for (std::size_t k = 0; k < c.points.size(); ++k) {
      out += k ? ", " : "";
      out += "{\"param\": " + json_number(c.points[k].param) +
             ", \"value\": " + json_number(c.points[k].value) + "}";
    }
    out += "]";
  }
  out += curves.empty() ? "},\n" : "\n  },\n";

  out += "  \"energy\": [";
  for (std::size_t i = 0; i < energy.size(); ++i) {
    const auto& e = energy[i];
    out += i ? ",\n    " : "\n    ";
    out += "{\"t\": " + json_number(e.t) + ", \"lhs\": " + json_number(e.lhs) +
           ", \"rhs\": " + json_number(e.rhs) +
           ", \"residual\": " + json_number(e.residual) + "}";
  }
  out += energy.empty() ? "],\n" : "\n  ],\n";

  out += "  \"timing\": {\"timestamp\": " + json_string(timestamp) + "}\n";
  out += "}\n";
  return out;
}

std::string render_csv(const DiscreteField& f) {
  const SpaceTimeGrid& g = f.grid();
  const int dim = g.dim();
  const int arity = f.arity();

  std::string out = "t,x1";
  if (dim == 2) out += ",x2";
  out += ",value";
  if (arity >= 2) {
    for (int k = 0; k < arity; ++k) out += ",v" + std::to_string(k + 1);
  }
  out += '\n';

  char buf[40];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
    out += sep;
  };

  for (int n = 0; n < f.time_count(); ++n) {
    const double t = f.t_at(n);
    for (int i = 0; i < f.space_count(); ++i) {
      const VecD x = f.x_at(i);
      put(t, ',');
      put(x(0), ',');
      if (dim == 2) put(x(1), ',');
      if (arity == 1) {
        put(f.at(n, i), '\n');
      } else {
        double norm2 = 0.0;
        for (int k = 0; k < arity; ++k) norm2 += f.at(n, i, k) * f.at(n, i, k);
        put(std::sqrt(norm2), ',');
        for (int k = 0; k < arity; ++k) put(f.at(n, i, k), k + 1 == arity ? '\n' : ',');
      }
    }
  }
  return out;
}

std::string current_timestamp_utc() {
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::string strip_timestamp(const std::string& json) {
  std::string out;
  std::size_t pos = 0;
  while (pos < json.size()) {
    std::size_t nl = json.find('\n', pos);
    if (nl == std::string::npos) nl = json.size() - 1;
    std::string line = json.substr(pos, nl - pos + 1);
    if (line.find("\"timestamp\"") == std::string::npos) out += line;
    pos = nl + 1;
  }
  return out;
}

}  // namespace morpde
