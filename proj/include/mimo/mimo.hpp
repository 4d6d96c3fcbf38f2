#pragma once

#include "bench.hpp"
#include "channel.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "detectors.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "matrix.hpp"
#include "modem.hpp"
#include "nn.hpp"
#include "nn_io.hpp"
#include "nn_train.hpp"
#include "rng.hpp"
#include "sha1.hpp"
#include "sweep.hpp"
#include "textio.hpp"
