#include "vistanet/kvconfig.hpp"

#include <fstream>

#include "vistanet/common.hpp"

namespace vistanet {

std::string trim_ws(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::ifstream in(path);
    check(static_cast<bool>(in), "cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim_ws(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        check(eq != std::string::npos,
              path + ":" + std::to_string(lineno) + ": expected key=value");
        kv[trim_ws(t.substr(0, eq))] = trim_ws(t.substr(eq + 1));
    }
    return kv;
}

}  // namespace vistanet
