#pragma once

#include <map>
#include <string>

namespace vistanet {

// Flat key=value text files ('#' comments, blank lines ignored). Used for
// dataset layouts and run configs so provenance snapshots stay diffable.
std::map<std::string, std::string> read_kv_file(const std::string& path);

std::string trim_ws(const std::string& s);

}  // namespace vistanet
