#pragma once

#include <string>

#include "netid/network.hpp"

namespace netid {

// JSON network description:
// {
//   "nodes": 4,
//   "modules": [{"to": 3, "from": 1, "num": [0,1,0.05], "den": [1,1,0.6]}],
//   "noise":   [{"node": 1, "num": [1], "den": [1,0.2], "variance": 0.05}],
//   "references": [2, 4]
// }
// Polynomial arrays are ascending powers of q^-1. Unknown keys are a
// ParseError (naming the key); semantic problems are a ValidationError.
NetworkModel network_from_json(const std::string& text);
std::string network_to_json(const NetworkModel& net);

NetworkModel load_network(const std::string& path);
void save_network(const std::string& path, const NetworkModel& net);

// Node-signal CSV: a "# seed <n>" comment line, a header
// t,w1..wL,r1..rL, then one row per sample with %.17g values (doubles
// round-trip exactly).
std::string data_to_csv(const DataRecord& data);
DataRecord data_from_csv(const std::string& text);

DataRecord load_data(const std::string& path);
void save_data(const std::string& path, const DataRecord& data);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace netid
