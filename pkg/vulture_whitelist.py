# Vulture whitelist: parameters required by callback/protocol signatures
# that vulture incorrectly reports as unused.
#
# Run vulture with: poetry run vulture app/ vulture_whitelist.py --min-confidence 80

# click option callback signature (ctx, param, value)
ctx  # unused variable
param  # unused variable

# QueryStrategy.select(params, unlabeled, b, rng): random ignores params, mge ignores rng
params  # unused variable
rng  # unused variable

# ProgressHandle protocol method signatures
text  # unused variable
value  # unused variable
