#include "fedcca/cli.hpp"

int main(int argc, char** argv) {
    return fedcca::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
