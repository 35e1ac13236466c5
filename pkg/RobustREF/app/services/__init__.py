""" INIT """
