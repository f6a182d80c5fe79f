#pragma once

#include "tabmdp/absorbing.hpp"
#include "tabmdp/errors.hpp"
#include "tabmdp/eval_bounds.hpp"
#include "tabmdp/families.hpp"
#include "tabmdp/generative.hpp"
#include "tabmdp/harness.hpp"
#include "tabmdp/io.hpp"
#include "tabmdp/lemma_checks.hpp"
#include "tabmdp/mdp.hpp"
#include "tabmdp/perturb.hpp"
#include "tabmdp/rng.hpp"
#include "tabmdp/tiebreak.hpp"
