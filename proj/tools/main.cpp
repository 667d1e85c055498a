#include "cli/commands.h"

int main(int argc, char** argv) {
  return cinetransfer::cli::cli_main(argc, argv);
}
