#include "oncosynth/pipeline.hpp"

int main(int argc, char** argv) { return oncosynth::cli_main(argc, argv); }
