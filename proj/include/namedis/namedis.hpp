#pragma once

#include "error.hpp"
#include "random.hpp"
#include "matrix.hpp"
#include "stopwords.hpp"
#include "corpus.hpp"
#include "synthetic.hpp"
#include "hetnet.hpp"
#include "walker.hpp"
#include "embed.hpp"
#include "similarity.hpp"
#include "fusion.hpp"
#include "semantic.hpp"
#include "cluster.hpp"
#include "eval.hpp"
#include "pipeline.hpp"
