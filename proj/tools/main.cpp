#include "quackstore/cli.hpp"

int main(int argc, char **argv) {
	return quackstore::cli::Run(argc, argv);
}
