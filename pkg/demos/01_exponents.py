# # Exponents of the absorption problem
#
# Everything downstream is organised by a handful of numbers derived from
# (N, m, q). This script prints them for a few parameter choices and shows
# what happens when the parameters leave the admissible range.

# In[1]:

from fdextinct import INF, derive, validate_params
from fdextinct.exponents import OrderViolation, SobolevViolation

# The reference case used in most demos: one space dimension, m = 1/2, q = 3/4.

# In[2]:

ex = derive(validate_params(1, 0.5, 0.75))
for key, value in ex.as_dict().items():
    print(f"{key:>11} = {value!r}")

# The L^r norms vanish at different speeds: the rate grows with r and tops
# out at alpha for the sup norm.

# In[3]:

for r in (1, 1.5, 2, 4, 16, INF):
    print(f"r = {r!s:>4}: rate {ex.rate(r):.6f}")

# Inadmissible parameters are rejected with a specific error.

# In[4]:

for N, m, q in ((1, 0.75, 0.5), (3, 0.2, 0.5)):
    try:
        validate_params(N, m, q)
    except (OrderViolation, SobolevViolation) as exc:
        print(f"N={N}, m={m}, q={q}: {type(exc).__name__}: {exc}")

# The positivity regime also admits q = m.

# In[5]:

print(validate_params(3, 0.4, 0.4, regime="positivity"))
