# modules/__init__.py
# Domain package of the quantum cloud provisioning planner.
