// External score provider that answers every request with zeros of the
// request's shape. Used to exercise the child-process protocol.
#include <iostream>
#include <string>

#include <nlohmann/json.hpp>

int main() {
    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.empty()) {
            continue;
        }
        const nlohmann::json req = nlohmann::json::parse(line);
        nlohmann::json zeros = req.at("x");
        for (auto& row : zeros) {
            for (auto& v : row) {
                v = 0.0;
            }
        }
        std::cout << nlohmann::json{{"sx", zeros}, {"sm", zeros}}.dump() << std::endl;
    }
    return 0;
}
