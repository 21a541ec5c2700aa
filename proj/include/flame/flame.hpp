#pragma once

#include "flame/annotate.hpp"
#include "flame/config.hpp"
#include "flame/context.hpp"
#include "flame/corpus.hpp"
#include "flame/diff.hpp"
#include "flame/error.hpp"
#include "flame/eval.hpp"
#include "flame/judge.hpp"
#include "flame/llm.hpp"
#include "flame/pipeline.hpp"
#include "flame/prompts.hpp"
#include "flame/repair.hpp"
#include "flame/sbfl.hpp"
#include "flame/textvec.hpp"
#include "flame/util.hpp"
#include "flame/vote.hpp"
