#include <string>
#include <vector>

#include "obstacle_ldp/cli.hpp"

int main(int argc, char** argv) {
    return obstacle_ldp::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
