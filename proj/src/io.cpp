#include "netid/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "netid/errors.hpp"

namespace netid {

namespace {

using nlohmann::json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const char* where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok)
      throw ParseError(std::string("unknown key \"") + key + "\" in " + where);
  }
}

std::vector<double> number_array(const json& a, const char* what) {
  if (!a.is_array() || a.empty())
    throw ParseError(std::string(what) + " must be a non-empty array");
  std::vector<double> v;
  for (const auto& x : a) {
    if (!x.is_number())
      throw ParseError(std::string(what) + " must contain numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

json poly_array(const Poly& p) { return json(p.coeffs()); }

}  // namespace

NetworkModel network_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("bad JSON: ") + e.what());
  }
  if (!root.is_object()) throw ParseError("network file must be an object");
  check_keys(root, {"nodes", "modules", "noise", "references"}, "network");
  for (const char* req : {"nodes", "modules", "noise"})
    if (!root.contains(req))
      throw ParseError(std::string("missing key \"") + req + "\"");

  NetworkModel net;
  if (!root["nodes"].is_number_integer())
    throw ParseError("\"nodes\" must be an integer");
  net.L = root["nodes"].get<int>();

  try {
    for (const auto& m : root["modules"]) {
      if (!m.is_object()) throw ParseError("module entries must be objects");
      check_keys(m, {"to", "from", "num", "den"}, "module");
      for (const char* req : {"to", "from", "num", "den"})
        if (!m.contains(req))
          throw ParseError(std::string("module missing \"") + req + "\"");
      const int to = m["to"].get<int>();
      const int from = m["from"].get<int>();
      if (net.modules.count({to, from}))
        throw ValidationError("duplicate module definition");
      net.modules.emplace(
          std::make_pair(to, from),
          RationalTF(Poly(number_array(m["num"], "module num")),
                     Poly(number_array(m["den"], "module den"))));
    }
    for (const auto& n : root["noise"]) {
      if (!n.is_object()) throw ParseError("noise entries must be objects");
      check_keys(n, {"node", "num", "den", "variance"}, "noise");
      for (const char* req : {"node", "num", "den", "variance"})
        if (!n.contains(req))
          throw ParseError(std::string("noise missing \"") + req + "\"");
      const int node = n["node"].get<int>();
      if (node < 1 || node > net.L)
        throw ValidationError("noise node index out of range");
      if (static_cast<int>(net.noise.size()) < net.L) net.noise.resize(net.L);
      net.noise[node - 1] =
          NoiseSpec{RationalTF(Poly(number_array(n["num"], "noise num")),
                               Poly(number_array(n["den"], "noise den"))),
                    n["variance"].get<double>()};
    }
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(e.what());
  }
  if (root.contains("references")) {
    for (const auto& x : root["references"]) {
      if (!x.is_number_integer())
        throw ParseError("\"references\" must contain integers");
      net.references.push_back(x.get<int>());
    }
  }

  const ValidationReport rep = validate(net);
  if (!rep.ok()) {
    std::string msg = "invalid network:";
    for (const auto& v : rep.violations) msg += " [" + v + "]";
    throw ValidationError(msg);
  }
  return net;
}

std::string network_to_json(const NetworkModel& net) {
  json root;
  root["nodes"] = net.L;
  root["modules"] = json::array();
  for (const auto& [key, g] : net.modules)
    root["modules"].push_back(json{{"to", key.first},
                                   {"from", key.second},
                                   {"num", poly_array(g.num())},
                                   {"den", poly_array(g.den())}});
  root["noise"] = json::array();
  for (int node = 1; node <= net.L; ++node)
    root["noise"].push_back(json{{"node", node},
                                 {"num", poly_array(net.noise[node - 1].H.num())},
                                 {"den", poly_array(net.noise[node - 1].H.den())},
                                 {"variance", net.noise[node - 1].variance}});
  root["references"] = net.references;
  return root.dump(2) + "\n";
}

std::string data_to_csv(const DataRecord& data) {
  const int L = static_cast<int>(data.w.cols());
  std::string out = "# seed " + std::to_string(data.seed) + "\nt";
  for (int c = 1; c <= L; ++c) out += ",w" + std::to_string(c);
  for (int c = 1; c <= L; ++c) out += ",r" + std::to_string(c);
  out += "\n";
  char buf[40];
  for (int t = 0; t < data.N; ++t) {
    out += std::to_string(t + 1);
    for (int c = 0; c < 2 * L; ++c) {
      const double v = c < L ? data.w(t, c) : data.r(t, c - L);
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

DataRecord data_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# seed ", 0) != 0)
    throw ParseError("data file must start with a \"# seed\" line");
  DataRecord data;
  data.seed = std::strtoull(line.c_str() + 7, nullptr, 10);

  if (!std::getline(in, line) || line.rfind("t,w1", 0) != 0)
    throw ParseError("missing data header row");
  const size_t cols = std::count(line.begin(), line.end(), ',');
  if (cols % 2 != 0) throw ParseError("header must pair w and r columns");
  const int L = static_cast<int>(cols / 2);

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.c_str();
    char* end = nullptr;
    std::strtol(p, &end, 10);  // sample index
    p = end;
    for (size_t c = 0; c < cols; ++c) {
      if (*p != ',') throw ParseError("malformed data row");
      row.push_back(std::strtod(p + 1, &end));
      p = end;
    }
    if (*p != '\0') throw ParseError("trailing characters in data row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("data file has no samples");

  data.N = static_cast<int>(rows.size());
  data.w.resize(data.N, L);
  data.r.resize(data.N, L);
  for (int t = 0; t < data.N; ++t)
    for (int c = 0; c < L; ++c) {
      data.w(t, c) = rows[t][c];
      data.r(t, c) = rows[t][L + c];
    }
  return data;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << content;
  if (!out) throw Error("write failed: " + path);
}

NetworkModel load_network(const std::string& path) {
  return network_from_json(read_file(path));
}

void save_network(const std::string& path, const NetworkModel& net) {
  write_file(path, network_to_json(net));
}

DataRecord load_data(const std::string& path) {
  return data_from_csv(read_file(path));
}

void save_data(const std::string& path, const DataRecord& data) {
  write_file(path, data_to_csv(data));
}

}  // namespace netid
