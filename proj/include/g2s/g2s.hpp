#pragma once

#include "g2s/autodiff.hpp"
#include "g2s/beam.hpp"
#include "g2s/checkpoint.hpp"
#include "g2s/config.hpp"
#include "g2s/datasets.hpp"
#include "g2s/decoder.hpp"
#include "g2s/encoder.hpp"
#include "g2s/errors.hpp"
#include "g2s/graph.hpp"
#include "g2s/layers.hpp"
#include "g2s/metrics.hpp"
#include "g2s/model.hpp"
#include "g2s/params.hpp"
#include "g2s/sql.hpp"
#include "g2s/tensor.hpp"
#include "g2s/train.hpp"
#include "g2s/vocab.hpp"
