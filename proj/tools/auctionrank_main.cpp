#include "auctionrank/pipeline.hpp"

int main(int argc, char** argv) { return auctionrank::run_cli(argc, argv); }
