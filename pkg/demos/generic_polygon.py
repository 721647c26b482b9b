"""Generic Newton polygon formula against the exhaustive infimum for cubics."""
from expsum.harness import cmd_scan, slopes_str

for row in cmd_scan(3, [5, 11, 17, 23]):
    print(f"p={row.p:2d}  observed {slopes_str(row.observed):12s} formula {slopes_str(row.gnp):12s} "
          f"equal={row.eq_obs_gnp}  attained by {row.n_attaining}/{row.total}")
