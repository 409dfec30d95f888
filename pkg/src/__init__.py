# RASC Backhaul Planner - Source Package
