// SPDX-License-Identifier: Apache-2.0
#include "agentbug/cli.hpp"

int main(int argc, char** argv) {
    return agentbug::run_cli(argc, argv);
}
